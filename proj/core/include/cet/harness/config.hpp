#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cet/baselines/baselines.hpp"
#include "cet/datagen/generator.hpp"
#include "cet/model/cet_model.hpp"
#include "cet/pretrain/trainer.hpp"

namespace cet::harness {

// Flat `key = value` text. '#' starts a comment, blank lines are skipped,
// duplicate keys are errors. Readers mark keys consumed; check_consumed()
// rejects anything left over, so misspelled keys cannot silently no-op.
class ConfigMap {
 public:
  static ConfigMap parse_text(const std::string& text);  // ConfigError
  static ConfigMap parse_file(const std::string& path);  // DataError on I/O

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, std::string fallback);
  double get_double(const std::string& key, double fallback);
  std::size_t get_size(const std::string& key, std::size_t fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  std::vector<double> get_doubles(const std::string& key,
                                  std::vector<double> fallback);
  std::vector<std::uint64_t> get_u64s(const std::string& key,
                                      std::vector<std::uint64_t> fallback);
  std::vector<std::string> get_strings(const std::string& key,
                                       std::vector<std::string> fallback);

  // ConfigError naming every key no reader asked for.
  void check_consumed() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<bool> used_;

  const std::string* find(const std::string& key);
};

// Generator keys (companies, quarters, base_vol, drift_strength,
// drift_decay, ...). Anything absent keeps the SyntheticConfig default.
data::SyntheticConfig synthetic_from(ConfigMap& cfg);

struct ExperimentConfig {
  std::string protocol;  // fractions | sectors | days | ablation
  std::vector<model::ModelKind> models;
  std::vector<std::uint64_t> seeds;  // per-run training seeds
  std::uint64_t master_seed = 7;     // splits and the one-time pretrains

  data::SyntheticConfig synth;
  std::string bars_csv;      // both csv paths set -> ingest instead of
  std::string earnings_csv;  // generating

  model::ModelConfig model;
  double eps_hold = 2e-4;

  std::size_t batch_size = 64;
  std::size_t pretrain_epochs = 20;
  std::size_t pretrain_steps = 0;       // 0 = full pass
  std::size_t pretrain_val_batches = 4;
  std::size_t n_negatives = 20;
  double pretrain_lr = 2e-3;
  double ae_weight_decay = 1e-5;

  std::size_t finetune_epochs = 6;
  std::size_t finetune_steps = 0;
  double finetune_lr = 2e-4;
  // fraction sweep fine-tunes everything at the reduced rate by default
  pretrain::FinetuneMode finetune_mode = pretrain::FinetuneMode::unfrozen;
  // day protocol: continuous fine-tuning carries weights across days
  pretrain::FinetuneMode day_mode = pretrain::FinetuneMode::unfrozen;

  std::size_t eval_cap = 0;  // 0 = score the whole test split

  std::vector<double> fractions = {0.2, 0.5, 0.8};
  double test_fraction = 0.2;
  std::size_t k_max = 10;  // ablation horizon sweep

  double mask_fraction = 0.15;
  std::size_t mask_span = 5;
  double noise_std = 0.1;
  double temperature = 0.5;
  std::size_t proj_dim = 64;

  void validate() const;  // ConfigError
};

// Experiment keys; protocol itself comes from the caller (CLI flag).
// Consumes generator keys too via synthetic_from.
ExperimentConfig experiment_from(ConfigMap& cfg);

// Budget plumbing shared by the protocols and the CLI. Pre-training runs
// under master_seed; supervised passes take the per-run seed.
pretrain::PretrainConfig make_pretrain_config(const ExperimentConfig& cfg);
baselines::BaselineSpec make_baseline_spec(const ExperimentConfig& cfg,
                                           model::ModelKind kind);
pretrain::SupervisedConfig make_supervised_config(const ExperimentConfig& cfg,
                                                  std::uint64_t seed);

}  // namespace cet::harness
