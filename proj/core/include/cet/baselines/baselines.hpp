#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cet/datagen/dataset.hpp"
#include "cet/datagen/split.hpp"
#include "cet/model/cet_model.hpp"
#include "cet/pretrain/batch.hpp"
#include "cet/pretrain/trainer.hpp"

namespace cet::baselines {

// One comparison model: three self-supervised pretexts (ae, mlm, simclr)
// and three supervised pipelines (suprep, supraw, supraw2). All share the
// CET primitive layers; what differs is the pretext and the head wiring.
struct BaselineSpec {
  model::ModelKind kind = model::ModelKind::ae;
  model::ModelConfig model;

  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  std::size_t steps_per_epoch = 0;  // 0 = full pass
  std::size_t max_val_batches = 0;  // 0 = every holdout batch
  double lr = 2e-3;
  double ae_weight_decay = 1e-5;  // ae.* group during the ae pretext
  double val_fraction = 0.1;
  std::size_t divergence_patience = 3;
  std::uint64_t seed = 0;

  // mlm: contiguous spans, mask_fraction of each window's positions
  double mask_fraction = 0.15;
  std::size_t mask_span = 5;
  // simclr: Gaussian noise on standardized features, NT-Xent temperature,
  // projection width
  double noise_std = 0.1;
  double temperature = 0.5;
  std::size_t proj_dim = 64;

  // ConfigError on bad knobs; mlm masks must leave part of the window
  // visible, simclr needs at least two windows per batch.
  void validate() const;
};

// Head wiring implied by the model kind: supraw concatenates raw earnings,
// supraw2 reads price alone, everything else fuses c_s + c_e.
pretrain::HeadWiring wiring_for(model::ModelKind kind);

// Parameter set per kind, kind stamped in metadata. Every store shares
// enc.* and ar.*; the diff against CET's name set is exactly the pretext
// extras and the head width:
//   ae      + pdec.*            mlm     + mlm.mask, mlm.dec.*
//   simclr  + sim.proj.*        suprep  (CET minus wk.*)
//   supraw  head over d+38      supraw2 head over d
model::ParamStore make_baseline_params(const BaselineSpec& spec,
                                       std::uint64_t seed);

// --- pretext pieces, exposed for tests --------------------------------

// Price autoencoder: window -> c_s -> flattened window, MSE over all
// entries.
num::Tensor ae_price_loss(const num::Tensor& windows, std::size_t batch,
                          const model::ParamStore& params,
                          const model::ModelConfig& cfg);

struct MlmMask {
  std::vector<std::uint8_t> row_mask;  // [batch*omega], 1 = masked
  std::size_t masked = 0;              // flagged positions, >= 1 per window
};

// Contiguous spans per window, span-aligned, sampled without overlap.
MlmMask sample_mlm_mask(std::size_t batch, const BaselineSpec& spec,
                        num::Rng& rng);

// Masked latents are replaced by the learned mlm.mask vector before the
// (bidirectional) transformer; MSE on masked positions only.
num::Tensor mlm_masked_loss(const num::Tensor& windows, std::size_t batch,
                            const std::vector<std::uint8_t>& row_mask,
                            const model::ParamStore& params,
                            const model::ModelConfig& cfg);

// Two independently noised copies of the same windows.
std::pair<num::Tensor, num::Tensor> make_simclr_views(
    const num::Tensor& windows, double noise_std, num::Rng& rng);

// window view -> c_s -> affine+tanh projection -> unit rows.
num::Tensor simclr_projection(const num::Tensor& view, std::size_t batch,
                              const model::ParamStore& params,
                              const model::ModelConfig& cfg);

// Normalized-temperature cross-entropy over in-batch candidates: row i of
// each view scores every other row of both views, positive = its own twin.
// Uniform embeddings sit at ln(2B-1).
num::Tensor nt_xent(const num::Tensor& n1, const num::Tensor& n2,
                    double temperature);

// --- pretext training ---------------------------------------------------

// Same loop contract as pretrain_cet: day-1 windows, holdout selection,
// divergence guard at reference_loss + 5, best-val weights returned.
// reference_loss is the pretext's model-free baseline (zero-output MSE,
// target variance, ln(2B-1) respectively).
pretrain::PretrainResult pretrain_ae(const data::DataSet& ds,
                                     const BaselineSpec& spec);
pretrain::PretrainResult pretrain_mlm(const data::DataSet& ds,
                                      const BaselineSpec& spec);
pretrain::PretrainResult pretrain_simclr(const data::DataSet& ds,
                                         const BaselineSpec& spec);

// Dispatch on spec.kind; supervised kinds have no pretext phase and throw
// ConfigError.
pretrain::PretrainResult pretrain_baseline(const data::DataSet& ds,
                                           const BaselineSpec& spec);

// --- fine-tuning ----------------------------------------------------------

// Marks what a movement fine-tune must not touch: the pretext-only arrays
// always, plus the pretrained trunk in frozen mode. The earnings encoder
// counts as trunk only where the pretext trained it (cet, ae); mlm and
// simclr keep ae.enc trainable even frozen, it has only seen init noise.
void freeze_for_finetune(model::ParamStore& params, model::ModelKind kind,
                         pretrain::FinetuneMode mode);

// finetune_cet generalized over the checkpoint's stamped kind: clones,
// freezes per kind and mode, trains the fused movement head. An empty test
// span skips evaluation (intermediate fine-tune stages score nothing).
pretrain::FinetuneResult finetune_baseline(
    const data::DataSet& ds, const model::ParamStore& pretrained,
    std::span<const data::SampleRef> train,
    std::span<const data::SampleRef> test, pretrain::FinetuneMode mode,
    const pretrain::SupervisedConfig& cfg);

// --- supervised baselines ------------------------------------------------

struct SupervisedReport {
  model::ModelKind kind = model::ModelKind::suprep;
  std::vector<double> per_seed;  // accuracy, percent
  std::vector<pretrain::EvalResult> evals;
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev over seeds, 0 for one seed
};

// Fresh weights per seed, trained on cross-entropy alone and scored on the
// common test refs. kind must be suprep, supraw, or supraw2.
SupervisedReport train_supervised(const data::DataSet& ds,
                                  const BaselineSpec& spec,
                                  std::span<const data::SampleRef> train,
                                  std::span<const data::SampleRef> test,
                                  const pretrain::SupervisedConfig& cfg,
                                  std::span<const std::uint64_t> seeds);

}  // namespace cet::baselines
