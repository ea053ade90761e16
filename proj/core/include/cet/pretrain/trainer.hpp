#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cet/datagen/dataset.hpp"
#include "cet/datagen/split.hpp"
#include "cet/model/cet_model.hpp"
#include "cet/pretrain/batch.hpp"

namespace cet::pretrain {

struct PretrainConfig {
  model::ModelConfig model;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  std::size_t n_negatives = 20;
  // 0 runs the full anchor set each epoch; otherwise an epoch is this many
  // batches drawn from the epoch's shuffle (desk-scale budget control).
  std::size_t steps_per_epoch = 0;
  // 0 scores every holdout batch; otherwise validation stops after this
  // many. The holdout is shuffled once, so a prefix is an unbiased sample.
  std::size_t max_val_batches = 0;
  double lr = 2e-3;
  double ae_weight_decay = 1e-5;
  double val_fraction = 0.1;
  std::size_t divergence_patience = 3;
  bool shuffled_positives = false;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // InfoNCE term
  std::vector<double> per_k;
  double recon_loss = 0.0;
  double val_loss = 0.0;
  double cos_sim = 0.0;  // validation positives vs W_k-projected context
  double wall_ms = 0.0;
};

struct PretrainResult {
  model::ParamStore params;  // best validation-loss weights
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
  // Model-free loss the pretext must beat: ln(N+1) for CPC, zero-output MSE
  // for reconstruction, target variance for masked prediction, ln(2B-1) for
  // contrastive views. The divergence guard trips at this value + 5.
  double reference_loss = 0.0;
  std::size_t negatives_sampled = 0;
  std::size_t gap_violations = 0;  //0 across any run

  // Mean over the final 3 recorded epochs.
  double equilibrium_loss() const;
  double equilibrium_cos() const;
};

// CPC pre-training on day-1 anchors: Adam on InfoNCE + earnings
// reconstruction, ae.* under its own weight decay, 10% anchor holdout for
// model selection. Sustained divergence (train loss above ln(N+1)+5 for
// divergence_patience consecutive epochs) raises NumericError.
PretrainResult pretrain_cet(const data::DataSet& ds,
                            const PretrainConfig& cfg);

enum class FinetuneMode { frozen, unfrozen };

// Which inputs reach the classification head.
//   fused:      softmax over c_s + c_e (CET and SupRep wiring)
//   concat:     head on [c_s, raw standardized earnings], 166 dims (SupRaw)
//   price_only: head on c_s alone, earnings-taint asserted zero (SupRaw2)
enum class HeadWiring { fused, concat, price_only };

struct SupervisedConfig {
  model::ModelConfig model;
  HeadWiring wiring = HeadWiring::fused;
  std::size_t epochs = 6;
  std::size_t batch_size = 64;
  std::size_t steps_per_epoch = 0;  // 0 = full pass
  double lr = 2e-4;
  double eps_hold = 2e-4;
  std::uint64_t seed = 0;
};

struct EvalResult {
  double accuracy = 0.0;  // percent
  std::vector<std::size_t> confusion;  // 3x3 row-major, rows = truth
  std::size_t n = 0;
};

num::Tensor movement_logits(const LabeledBatch& batch,
                            const model::ParamStore& params,
                            const model::ModelConfig& cfg, HeadWiring wiring);

// Cross-entropy training of the movement head (and whatever else is
// trainable in `params`) over the given samples. Returns per-epoch mean
// losses.
std::vector<double> train_movement(const data::DataSet& ds,
                                   model::ParamStore& params,
                                   std::span<const data::SampleRef> train,
                                   const SupervisedConfig& cfg);

EvalResult evaluate_movement(const data::DataSet& ds,
                             const model::ParamStore& params,
                             std::span<const data::SampleRef> test,
                             const SupervisedConfig& cfg);

struct FinetuneResult {
  model::ParamStore params;
  std::vector<double> epoch_losses;
  EvalResult test;
};

// Fine-tunes a pretrained CET checkpoint for movement classification.
// frozen: only head.* trains (enc/ar/ae bytes stay identical); unfrozen:
// everything but the LBL matrices trains at the reduced rate. The input
// store is cloned, never mutated.
FinetuneResult finetune_cet(const data::DataSet& ds,
                            const model::ParamStore& pretrained,
                            std::span<const data::SampleRef> train,
                            std::span<const data::SampleRef> test,
                            FinetuneMode mode, const SupervisedConfig& cfg);

}  // namespace cet::pretrain
