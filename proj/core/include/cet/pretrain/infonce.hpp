#pragma once

#include <span>
#include <vector>

#include "cet/model/cet_model.hpp"
#include "cet/pretrain/batch.hpp"

namespace cet::pretrain {

struct InfoNceResult {
  num::Tensor loss;           // scalar, mean over anchors and k
  std::vector<double> per_k;  // detached per-step means
};

// Eq.-4 loss: per anchor and step k, a (1+N)-way cross-entropy over
// log-bilinear scores, candidates encoded with the current g_enc.
InfoNceResult infonce_loss(const CpcBatch& batch,
                           const model::ParamStore& params,
                           const model::ModelConfig& cfg);

// a.b / (|a||b|); zero-norm input is a contract violation.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Mean over anchors and k of cos(W_k c, z_positive). Diagnostic only.
double mean_positive_cosine(const CpcBatch& batch,
                            const model::ParamStore& params,
                            const model::ModelConfig& cfg);

}  // namespace cet::pretrain
