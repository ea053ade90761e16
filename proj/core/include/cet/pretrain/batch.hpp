#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cet/datagen/dataset.hpp"
#include "cet/datagen/split.hpp"
#include "cet/numerics/rng.hpp"
#include "cet/numerics/tensor.hpp"

namespace cet::pretrain {

struct CpcBatchSpec {
  std::size_t omega = 50;
  std::size_t k_steps = 5;
  std::size_t n_negatives = 20;
  // Control: candidate 0 is a pool draw instead of the true future, making
  // all 1+N candidates exchangeable; no scorer can beat ln(N+1) then.
  bool shuffled_positives = false;
};

struct CpcBatch {
  std::size_t batch = 0;
  std::size_t k_steps = 0;
  std::size_t n_negatives = 0;
  num::Tensor windows;   // [batch*omega, features]
  num::Tensor earnings;  // [batch, 38] standardized, earnings-tainted
  // candidates[k-1]: minute features of the 1+N candidates per anchor,
  // packed [batch*(1+N), features]; labels[k-1][b] is the positive's slot
  // (always 0 from make_cpc_batch).
  std::vector<num::Tensor> candidates;
  std::vector<std::vector<int>> labels;
  // Audit trail: day and minute of every sampled negative, in order.
  std::vector<std::size_t> negative_day;
  std::vector<std::size_t> negative_minute;
};

// All CPC anchor windows over post-announcement day-1 days: context
// [start, start+omega) plus k_steps future minutes inside the day.
std::vector<data::WindowRef> cpc_anchors(const data::DataSet& ds,
                                         const CpcBatchSpec& spec);

// Days eligible for negative draws: offset 0 and at least 5 trading days
// before the company's next announcement.
std::vector<std::size_t> negative_days(const data::DataSet& ds);

// Assembles one batch. Positives are the anchor's own future minutes;
// negatives are fresh draws of distinct pool days at the positive's
// minute-of-day, so time-of-day effects cancel in the contrast.
CpcBatch make_cpc_batch(const data::DataSet& ds,
                        std::span<const data::WindowRef> anchors,
                        const std::vector<std::size_t>& pool_days,
                        const CpcBatchSpec& spec, num::Rng& rng);

// Negatives violating the pre-announcement gap rule (must be zero).
std::size_t count_gap_violations(const data::DataSet& ds,
                                 const CpcBatch& batch);

// --- pretext batches (AE / MLM / SimCLR) ------------------------------

struct PretextBatch {
  std::size_t batch = 0;
  num::Tensor windows;   // [batch*omega, features]
  num::Tensor earnings;  // [batch, 38], tainted; undefined unless requested
};

// Day-1 windows with no future-minute requirement (reconstruction pretexts
// read nothing past the window).
std::vector<data::WindowRef> pretext_anchors(const data::DataSet& ds,
                                             std::size_t omega);

PretextBatch make_pretext_batch(const data::DataSet& ds,
                                std::span<const data::WindowRef> refs,
                                std::size_t omega, bool with_earnings);

// --- supervised batches ----------------------------------------------

struct LabeledBatch {
  std::size_t batch = 0;
  num::Tensor windows;   // [batch*omega, features]
  num::Tensor earnings;  // [batch, 38] standardized, earnings-tainted
  std::vector<int> labels;
};

LabeledBatch make_labeled_batch(const data::DataSet& ds,
                                std::span<const data::SampleRef> refs,
                                std::size_t omega, double eps_hold);

}  // namespace cet::pretrain
