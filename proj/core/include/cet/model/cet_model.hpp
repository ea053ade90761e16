#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cet/model/param_store.hpp"
#include "cet/numerics/rng.hpp"
#include "cet/numerics/tensor.hpp"

namespace cet::model {

struct ModelConfig {
  std::size_t d = 128;            // latent width, shared by every context path
  std::size_t omega = 50;         // context window length, minutes
  std::size_t upsilon = 2;        // per-minute features (close, volume)
  std::size_t earnings_dim = 38;  // metrics per quarter
  std::size_t k_steps = 5;        // CPC forward steps (one W_k each)
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 256;
  std::size_t enc_hidden = 128;  // g_enc hidden width
  std::size_t n_classes = 3;
  std::size_t max_seq = 390;  // positional table rows

  // Throws ConfigError; heads must divide d, nothing may be zero.
  void validate() const;
};

enum class ModelKind : std::uint8_t {
  cet = 0,
  ae = 1,
  mlm = 2,
  simclr = 3,
  suprep = 4,
  supraw = 5,
  supraw2 = 6,
};

const char* kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);  // unknown -> ConfigError

// Checkpoint metadata rides in a reserved scalar array "meta.kind".
void stamp_kind(ParamStore& store, ModelKind kind);
ModelKind checkpoint_kind(const ParamStore& store);

// --- parameter construction -------------------------------------------
// Weights draw from normal(0, 1/sqrt(fan_in)); biases and norm offsets are
// zero, norm gains one. W_k and the head start at zero so the initial
// InfoNCE sits exactly at ln(N+1) and the initial logits are uniform.

// prefix.w [in, out] with normal(0, 1/sqrt(in)) entries, prefix.b zero.
void add_affine(ParamStore& store, const std::string& prefix, std::size_t in,
                std::size_t out, num::Rng& rng);
// linear(x, prefix.w, prefix.b)
num::Tensor affine(const num::Tensor& x, const ParamStore& store,
                   const std::string& prefix);

void add_price_encoder(ParamStore& store, const ModelConfig& cfg,
                       num::Rng& rng);                                // enc.*
void add_transformer(ParamStore& store, const ModelConfig& cfg,
                     num::Rng& rng);                                  // ar.*
void add_earnings_autoencoder(ParamStore& store, const ModelConfig& cfg,
                              num::Rng& rng);                         // ae.*
void add_lbl_scorers(ParamStore& store, const ModelConfig& cfg);      // wk.*
void add_head(ParamStore& store, std::size_t in_dim, std::size_t n_classes);

// Full CET stack: enc.*, ar.*, ae.*, wk.1..K, head.*.
ParamStore make_cet_params(const ModelConfig& cfg, std::uint64_t seed);

// --- forward passes ------------------------------------------------------
// Batched rows are packed: a [batch * seq, d] tensor holds batch sequences
// of equal length back to back.

// Per-minute MLP, [n, upsilon] -> [n, d]. Inputs must be standardized:
// non-finite or absurdly large magnitudes are a contract violation.
num::Tensor encode_price(const num::Tensor& x, const ParamStore& store);

// Adds the sinusoidal position table row-wise per sequence.
// seq = rows/batch must not exceed cfg.max_seq.
num::Tensor positional_encode(const num::Tensor& z, std::size_t batch,
                              const ModelConfig& cfg);
// The raw table, [seq, d]; exposed for tests.
std::vector<double> positional_table(std::size_t seq, std::size_t d);

// Pre-norm transformer stack; returns all positions, [batch*seq, d].
num::Tensor transformer_forward(const num::Tensor& zp, const ParamStore& store,
                                const ModelConfig& cfg, std::size_t batch,
                                bool causal);
// Output at each sequence's final position: the context c_s, [batch, d].
num::Tensor transformer_context(const num::Tensor& zp, const ParamStore& store,
                                const ModelConfig& cfg, std::size_t batch,
                                bool causal = true);
// encode -> positional -> transformer -> last position, for [batch*omega,
// upsilon] windows.
num::Tensor price_context(const num::Tensor& windows, std::size_t batch,
                          const ParamStore& store, const ModelConfig& cfg,
                          bool causal = true);

num::Tensor encode_earnings(const num::Tensor& e, const ParamStore& store);
num::Tensor decode_earnings(const num::Tensor& c_e, const ParamStore& store);
// decode(encode(e)) against e; returns the scalar MSE.
num::Tensor earnings_recon_loss(const num::Tensor& e, const ParamStore& store);

// c = c_s + c_e, elementwise.
num::Tensor fuse_context(const num::Tensor& c_s, const num::Tensor& c_e);

// exp(z^T W_k c) for single vectors; overflow of the exp is a numeric
// error. Diagnostic only: loss code works in the log domain via
// lbl_log_scores.
double score_lbl(const num::Tensor& z, const num::Tensor& c,
                 const num::Tensor& w_k);
// Log-domain scores for packed candidates: out[b, j] =
// candidates[b*group+j]^T W_k c[b], shape [batch, group].
num::Tensor lbl_log_scores(const num::Tensor& candidates, const num::Tensor& c,
                           const num::Tensor& w_k, std::size_t group);

// Affine head over the fused context, [batch, in_dim] -> [batch, classes].
num::Tensor classify_movement(const num::Tensor& c, const ParamStore& store);

// Argmax with ties broken toward the lowest class index.
int argmax_class(std::span<const double> logits);
std::vector<int> predict_classes(const num::Tensor& logits);

}  // namespace cet::model
