#include "cet/pretrain/infonce.hpp"

#include <cmath>
#include <string>

#include "cet/errors.hpp"
#include "cet/numerics/ops.hpp"

namespace cet::pretrain {

namespace {

num::Tensor fused_context(const CpcBatch& batch,
                          const model::ParamStore& params,
                          const model::ModelConfig& cfg) {
  num::Tensor c_s =
      model::price_context(batch.windows, batch.batch, params, cfg);
  num::Tensor c_e = model::encode_earnings(batch.earnings, params);
  return model::fuse_context(c_s, c_e);
}

}  // namespace

InfoNceResult infonce_loss(const CpcBatch& batch,
                           const model::ParamStore& params,
                           const model::ModelConfig& cfg) {
  if (batch.n_negatives == 0 || batch.candidates.empty()) {
    throw ContractError("infonce: empty negative set");
  }
  if (batch.candidates.size() != batch.k_steps ||
      batch.labels.size() != batch.k_steps) {
    throw ContractError("infonce: candidate/label arity mismatch");
  }
  const std::size_t group = 1 + batch.n_negatives;
  num::Tensor c = fused_context(batch, params, cfg);

  InfoNceResult out;
  out.per_k.reserve(batch.k_steps);
  num::Tensor total;
  for (std::size_t k = 1; k <= batch.k_steps; ++k) {
    num::Tensor z = model::encode_price(batch.candidates[k - 1], params);
    num::Tensor logits = model::lbl_log_scores(
        z, c, params.get("wk." + std::to_string(k)), group);
    num::Tensor loss_k = num::cross_entropy(logits, batch.labels[k - 1]);
    out.per_k.push_back(loss_k.scalar_value());
    total = total.defined() ? num::add(total, loss_k) : loss_k;
  }
  out.loss = num::scale(total, 1.0 / static_cast<double>(batch.k_steps));
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine: length mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw ContractError("cosine: zero vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double mean_positive_cosine(const CpcBatch& batch,
                            const model::ParamStore& params,
                            const model::ModelConfig& cfg) {
  const std::size_t group = 1 + batch.n_negatives;
  num::Tensor c = fused_context(batch, params, cfg);
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 1; k <= batch.k_steps; ++k) {
    num::Tensor z = model::encode_price(batch.candidates[k - 1], params);
    num::Tensor proj = num::matmul(
        c, num::transpose(params.get("wk." + std::to_string(k))));
    auto pv = proj.values();
    auto zv = z.values();
    const std::size_t d = proj.cols();
    for (std::size_t b = 0; b < batch.batch; ++b) {
      const auto pos = static_cast<std::size_t>(batch.labels[k - 1][b]);
      auto pr = pv.subspan(b * d, d);
      auto zr = zv.subspan((b * group + pos) * d, d);
      double dot = 0.0, np = 0.0, nz = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        dot += pr[j] * zr[j];
        np += pr[j] * pr[j];
        nz += zr[j] * zr[j];
      }
      // Zero-norm projections (untrained W_k) count as no alignment.
      if (np > 0.0 && nz > 0.0) acc += dot / (std::sqrt(np) * std::sqrt(nz));
      ++n;
    }
  }
  return acc / static_cast<double>(n);
}

}  // namespace cet::pretrain
