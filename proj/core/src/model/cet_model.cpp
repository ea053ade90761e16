#include "cet/model/cet_model.hpp"

#include <cmath>
#include <string>

#include "cet/errors.hpp"
#include "cet/numerics/ops.hpp"

namespace cet::model {

namespace {

// Standardized inputs are O(1); anything beyond this is raw data or junk.
constexpr double kMaxStandardized = 100.0;

constexpr double kExpOverflow = 709.0;  // ln(DBL_MAX) rounded down

std::vector<double> weight_init(num::Rng& rng, std::size_t fan_in,
                                std::size_t count) {
  std::vector<double> w(count);
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : w) x = rng.normal(0.0, s);
  return w;
}

void add_norm(ParamStore& store, const std::string& prefix, std::size_t d) {
  store.add(prefix + ".g", {d}, std::vector<double>(d, 1.0));
  store.add(prefix + ".b", {d});
}

}  // namespace

void add_affine(ParamStore& store, const std::string& prefix, std::size_t in,
                std::size_t out, num::Rng& rng) {
  store.add(prefix + ".w", {in, out}, weight_init(rng, in, in * out));
  store.add(prefix + ".b", {out});
}

num::Tensor affine(const num::Tensor& x, const ParamStore& store,
                   const std::string& prefix) {
  return num::linear(x, store.get(prefix + ".w"), store.get(prefix + ".b"));
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw ConfigError(std::string("model config: ") + what +
                                  " must be positive");
  };
  positive(d, "d");
  positive(omega, "omega");
  positive(upsilon, "upsilon");
  positive(earnings_dim, "earnings_dim");
  positive(k_steps, "k_steps");
  positive(layers, "layers");
  positive(heads, "heads");
  positive(ff_dim, "ff_dim");
  positive(enc_hidden, "enc_hidden");
  positive(n_classes, "n_classes");
  positive(max_seq, "max_seq");
  if (d % heads != 0) {
    throw ConfigError("model config: heads must divide d");
  }
  if (omega > max_seq) {
    throw ConfigError("model config: omega exceeds max_seq");
  }
}

const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::cet: return "cet";
    case ModelKind::ae: return "ae";
    case ModelKind::mlm: return "mlm";
    case ModelKind::simclr: return "simclr";
    case ModelKind::suprep: return "suprep";
    case ModelKind::supraw: return "supraw";
    case ModelKind::supraw2: return "supraw2";
  }
  throw ConfigError("model kind: bad enum value");
}

ModelKind kind_from_name(const std::string& name) {
  for (ModelKind k : {ModelKind::cet, ModelKind::ae, ModelKind::mlm,
                      ModelKind::simclr, ModelKind::suprep, ModelKind::supraw,
                      ModelKind::supraw2}) {
    if (name == kind_name(k)) return k;
  }
  throw ConfigError("model kind: unknown name \"" + name + "\"");
}

void stamp_kind(ParamStore& store, ModelKind kind) {
  if (store.has("meta.kind")) {
    store.mutable_values("meta.kind")[0] = static_cast<double>(kind);
  } else {
    store.add("meta.kind", {1}, {static_cast<double>(kind)},
              /*requires_grad=*/false);
  }
}

ModelKind checkpoint_kind(const ParamStore& store) {
  if (!store.has("meta.kind")) {
    throw DataError("checkpoint: missing meta.kind array");
  }
  const double v = store.get("meta.kind").at(0);
  if (v < 0 || v > static_cast<double>(ModelKind::supraw2) ||
      v != std::floor(v)) {
    throw DataError("checkpoint: bad meta.kind value");
  }
  return static_cast<ModelKind>(static_cast<std::uint8_t>(v));
}

void add_price_encoder(ParamStore& store, const ModelConfig& cfg,
                       num::Rng& rng) {
  add_affine(store, "enc.l1", cfg.upsilon, cfg.enc_hidden, rng);
  add_affine(store, "enc.l2", cfg.enc_hidden, cfg.d, rng);
}

void add_transformer(ParamStore& store, const ModelConfig& cfg,
                     num::Rng& rng) {
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string p = "ar." + std::to_string(l) + ".";
    add_norm(store, p + "n1", cfg.d);
    add_affine(store, p + "att.q", cfg.d, cfg.d, rng);
    add_affine(store, p + "att.k", cfg.d, cfg.d, rng);
    add_affine(store, p + "att.v", cfg.d, cfg.d, rng);
    add_affine(store, p + "att.o", cfg.d, cfg.d, rng);
    add_norm(store, p + "n2", cfg.d);
    add_affine(store, p + "ff.l1", cfg.d, cfg.ff_dim, rng);
    add_affine(store, p + "ff.l2", cfg.ff_dim, cfg.d, rng);
  }
  add_norm(store, "ar.final", cfg.d);
}

void add_earnings_autoencoder(ParamStore& store, const ModelConfig& cfg,
                              num::Rng& rng) {
  add_affine(store, "ae.enc", cfg.earnings_dim, cfg.d, rng);
  add_affine(store, "ae.dec", cfg.d, cfg.earnings_dim, rng);
}

void add_lbl_scorers(ParamStore& store, const ModelConfig& cfg) {
  for (std::size_t k = 1; k <= cfg.k_steps; ++k) {
    store.add("wk." + std::to_string(k), {cfg.d, cfg.d});
  }
}

void add_head(ParamStore& store, std::size_t in_dim, std::size_t n_classes) {
  store.add("head.w", {in_dim, n_classes});
  store.add("head.b", {n_classes});
}

ParamStore make_cet_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  num::Rng rng(seed);
  ParamStore store;
  add_price_encoder(store, cfg, rng);
  add_transformer(store, cfg, rng);
  add_earnings_autoencoder(store, cfg, rng);
  add_lbl_scorers(store, cfg);
  add_head(store, cfg.d, cfg.n_classes);
  stamp_kind(store, ModelKind::cet);
  return store;
}

num::Tensor encode_price(const num::Tensor& x, const ParamStore& store) {
  for (double v : x.values()) {
    if (!std::isfinite(v) || std::abs(v) > kMaxStandardized) {
      throw ContractError("encode_price: window is not standardized");
    }
  }
  num::Tensor h = num::tanh_op(affine(x, store, "enc.l1"));
  return affine(h, store, "enc.l2");
}

std::vector<double> positional_table(std::size_t seq, std::size_t d) {
  std::vector<double> table(seq * d);
  for (std::size_t t = 0; t < seq; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      const double expo =
          static_cast<double>(2 * (i / 2)) / static_cast<double>(d);
      const double angle =
          static_cast<double>(t) / std::pow(10000.0, expo);
      table[t * d + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return table;
}

num::Tensor positional_encode(const num::Tensor& z, std::size_t batch,
                              const ModelConfig& cfg) {
  const std::size_t rows = z.rows(), d = z.cols();
  if (batch == 0 || rows % batch != 0) {
    throw ShapeError("positional_encode: rows not divisible by batch");
  }
  const std::size_t seq = rows / batch;
  if (seq > cfg.max_seq) {
    throw ConfigError("positional_encode: sequence length " +
                      std::to_string(seq) + " exceeds max_seq " +
                      std::to_string(cfg.max_seq));
  }
  const std::vector<double> table = positional_table(seq, d);
  std::vector<double> tiled(rows * d);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy(table.begin(), table.end(), tiled.begin() + b * table.size());
  }
  num::Tensor pos = num::Tensor::from_values({rows, d}, std::move(tiled));
  return num::add(z, pos);
}

num::Tensor transformer_forward(const num::Tensor& zp, const ParamStore& store,
                                const ModelConfig& cfg, std::size_t batch,
                                bool causal) {
  num::Tensor h = zp;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string p = "ar." + std::to_string(l) + ".";
    num::Tensor a =
        num::layer_norm(h, store.get(p + "n1.g"), store.get(p + "n1.b"));
    num::Tensor att = num::multihead_attention(
        affine(a, store, p + "att.q"), affine(a, store, p + "att.k"),
        affine(a, store, p + "att.v"), batch, cfg.heads, causal);
    h = num::add(h, affine(att, store, p + "att.o"));
    num::Tensor f =
        num::layer_norm(h, store.get(p + "n2.g"), store.get(p + "n2.b"));
    f = num::gelu(affine(f, store, p + "ff.l1"));
    h = num::add(h, affine(f, store, p + "ff.l2"));
  }
  return num::layer_norm(h, store.get("ar.final.g"), store.get("ar.final.b"));
}

num::Tensor transformer_context(const num::Tensor& zp, const ParamStore& store,
                                const ModelConfig& cfg, std::size_t batch,
                                bool causal) {
  num::Tensor all = transformer_forward(zp, store, cfg, batch, causal);
  const std::size_t seq = zp.rows() / batch;
  std::vector<std::size_t> last(batch);
  for (std::size_t b = 0; b < batch; ++b) last[b] = (b + 1) * seq - 1;
  return num::take_rows(all, last);
}

num::Tensor price_context(const num::Tensor& windows, std::size_t batch,
                          const ParamStore& store, const ModelConfig& cfg,
                          bool causal) {
  if (windows.rows() != batch * cfg.omega) {
    throw ShapeError("price_context: expected " +
                     std::to_string(batch * cfg.omega) + " rows, got " +
                     std::to_string(windows.rows()));
  }
  num::Tensor z = encode_price(windows, store);
  num::Tensor zp = positional_encode(z, batch, cfg);
  return transformer_context(zp, store, cfg, batch, causal);
}

num::Tensor encode_earnings(const num::Tensor& e, const ParamStore& store) {
  return num::tanh_op(affine(e, store, "ae.enc"));
}

num::Tensor decode_earnings(const num::Tensor& c_e, const ParamStore& store) {
  return affine(c_e, store, "ae.dec");
}

num::Tensor earnings_recon_loss(const num::Tensor& e, const ParamStore& store) {
  return num::mse_loss(decode_earnings(encode_earnings(e, store), store), e);
}

num::Tensor fuse_context(const num::Tensor& c_s, const num::Tensor& c_e) {
  return num::add(c_s, c_e);
}

double score_lbl(const num::Tensor& z, const num::Tensor& c,
                 const num::Tensor& w_k) {
  num::Tensor s = lbl_log_scores(z, c, w_k, 1);
  const double log_score = s.at(0);
  if (log_score > kExpOverflow) {
    throw NumericError("score_lbl: exp overflow at log-score " +
                       std::to_string(log_score));
  }
  return std::exp(log_score);
}

num::Tensor lbl_log_scores(const num::Tensor& candidates, const num::Tensor& c,
                           const num::Tensor& w_k, std::size_t group) {
  if (group == 0 || candidates.rows() != c.rows() * group) {
    throw ShapeError("lbl_log_scores: candidate rows must be batch * group");
  }
  num::Tensor projected = num::matmul(c, num::transpose(w_k));
  return num::grouped_dot(candidates, projected, group);
}

num::Tensor classify_movement(const num::Tensor& c, const ParamStore& store) {
  return affine(c, store, "head");
}

int argmax_class(std::span<const double> logits) {
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<int> predict_classes(const num::Tensor& logits) {
  const std::size_t rows = logits.rows(), cols = logits.cols();
  std::vector<int> out(rows);
  auto v = logits.values();
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = argmax_class(v.subspan(r * cols, cols));
  }
  return out;
}

}  // namespace cet::model
