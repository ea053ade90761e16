#include "cet/pretrain/batch.hpp"

#include <string>

#include "cet/errors.hpp"
#include "cet/preprocess/windows.hpp"

namespace cet::pretrain {

namespace {

constexpr int kMinPoolGap = 5;

void copy_minute(const data::DataSet& ds, std::size_t day, std::size_t minute,
                 std::vector<double>& out, std::size_t row) {
  const std::vector<double>& f = ds.feat[day];
  for (int j = 0; j < data::kFeatures; ++j) {
    out[row * data::kFeatures + j] = f[minute * data::kFeatures + j];
  }
}

num::Tensor earnings_rows(const data::DataSet& ds,
                          std::span<const std::size_t> days) {
  std::vector<double> e(days.size() * data::kEarningsDim);
  for (std::size_t b = 0; b < days.size(); ++b) {
    const data::DayRecord& day = ds.days[days[b]];
    if (day.quarter < 0) {
      throw ContractError("batch: day has no earnings quarter");
    }
    const std::vector<double>& ez =
        ds.earnings_std[ds.eq_index(day.company, day.quarter)];
    std::copy(ez.begin(), ez.end(), e.begin() + b * data::kEarningsDim);
  }
  num::Tensor t = num::Tensor::from_values(
      {days.size(), static_cast<std::size_t>(data::kEarningsDim)},
      std::move(e));
  t.add_taint(num::kTaintEarnings);
  return t;
}

}  // namespace

std::vector<data::WindowRef> cpc_anchors(const data::DataSet& ds,
                                         const CpcBatchSpec& spec) {
  const auto spans = prep::make_windows(static_cast<std::size_t>(data::kMinutes),
                                        spec.omega, spec.k_steps);
  std::vector<data::WindowRef> out;
  for (std::size_t day : ds.days_with_offset(1)) {
    for (const prep::WindowSpan& s : spans) out.push_back({day, s.start});
  }
  return out;
}

std::vector<std::size_t> negative_days(const data::DataSet& ds) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.days.size(); ++i) {
    if (ds.days[i].offset != 0) continue;
    if (data::gap_to_next_announcement(ds, {i, 0}) < kMinPoolGap) continue;
    out.push_back(i);
  }
  return out;
}

CpcBatch make_cpc_batch(const data::DataSet& ds,
                        std::span<const data::WindowRef> anchors,
                        const std::vector<std::size_t>& pool_days,
                        const CpcBatchSpec& spec, num::Rng& rng) {
  if (anchors.empty()) throw ContractError("cpc batch: no anchors");
  if (spec.n_negatives == 0) {
    throw ContractError("cpc batch: empty negative set");
  }
  if (pool_days.size() < spec.n_negatives + 1) {
    throw ConfigError("cpc batch: pool has " +
                      std::to_string(pool_days.size()) + " days, need > " +
                      std::to_string(spec.n_negatives));
  }
  const std::size_t bsz = anchors.size();
  const std::size_t group = 1 + spec.n_negatives;
  const auto feats = static_cast<std::size_t>(data::kFeatures);

  CpcBatch out;
  out.batch = bsz;
  out.k_steps = spec.k_steps;
  out.n_negatives = spec.n_negatives;

  std::vector<double> wv(bsz * spec.omega * feats);
  std::vector<std::size_t> anchor_days(bsz);
  for (std::size_t b = 0; b < bsz; ++b) {
    anchor_days[b] = anchors[b].day;
    for (std::size_t t = 0; t < spec.omega; ++t) {
      copy_minute(ds, anchors[b].day, anchors[b].start + t, wv,
                  b * spec.omega + t);
    }
  }
  out.windows =
      num::Tensor::from_values({bsz * spec.omega, feats}, std::move(wv));
  out.earnings = earnings_rows(ds, anchor_days);

  out.candidates.reserve(spec.k_steps);
  out.labels.assign(spec.k_steps, std::vector<int>(bsz, 0));
  for (std::size_t k = 1; k <= spec.k_steps; ++k) {
    std::vector<double> cv(bsz * group * feats);
    for (std::size_t b = 0; b < bsz; ++b) {
      const std::size_t minute = anchors[b].start + spec.omega + k - 1;
      if (minute >= static_cast<std::size_t>(data::kMinutes)) {
        throw ContractError("cpc batch: positive minute past day end");
      }
      const std::size_t base = b * group;
      if (spec.shuffled_positives) {
        const std::size_t decoy =
            pool_days[rng.uniform_int(pool_days.size())];
        copy_minute(ds, decoy, minute, cv, base);
      } else {
        copy_minute(ds, anchors[b].day, minute, cv, base);
      }
      const std::vector<std::size_t> picks =
          rng.sample_without_replacement(pool_days.size(), spec.n_negatives);
      for (std::size_t i = 0; i < spec.n_negatives; ++i) {
        const std::size_t neg_day = pool_days[picks[i]];
        copy_minute(ds, neg_day, minute, cv, base + 1 + i);
        out.negative_day.push_back(neg_day);
        out.negative_minute.push_back(minute);
      }
    }
    out.candidates.push_back(
        num::Tensor::from_values({bsz * group, feats}, std::move(cv)));
  }
  return out;
}

std::size_t count_gap_violations(const data::DataSet& ds,
                                 const CpcBatch& batch) {
  std::size_t bad = 0;
  for (std::size_t day : batch.negative_day) {
    if (ds.days[day].offset != 0 ||
        data::gap_to_next_announcement(ds, {day, 0}) < kMinPoolGap) {
      ++bad;
    }
  }
  return bad;
}

std::vector<data::WindowRef> pretext_anchors(const data::DataSet& ds,
                                             std::size_t omega) {
  const auto spans = prep::make_windows(
      static_cast<std::size_t>(data::kMinutes), omega, 0);
  std::vector<data::WindowRef> out;
  for (std::size_t day : ds.days_with_offset(1)) {
    for (const prep::WindowSpan& s : spans) out.push_back({day, s.start});
  }
  return out;
}

PretextBatch make_pretext_batch(const data::DataSet& ds,
                                std::span<const data::WindowRef> refs,
                                std::size_t omega, bool with_earnings) {
  if (refs.empty()) throw ContractError("pretext batch: no windows");
  const auto feats = static_cast<std::size_t>(data::kFeatures);
  PretextBatch out;
  out.batch = refs.size();
  std::vector<double> wv(refs.size() * omega * feats);
  std::vector<std::size_t> days(refs.size());
  for (std::size_t b = 0; b < refs.size(); ++b) {
    days[b] = refs[b].day;
    for (std::size_t t = 0; t < omega; ++t) {
      copy_minute(ds, refs[b].day, refs[b].start + t, wv, b * omega + t);
    }
  }
  out.windows =
      num::Tensor::from_values({refs.size() * omega, feats}, std::move(wv));
  if (with_earnings) out.earnings = earnings_rows(ds, days);
  return out;
}

LabeledBatch make_labeled_batch(const data::DataSet& ds,
                                std::span<const data::SampleRef> refs,
                                std::size_t omega, double eps_hold) {
  if (refs.empty()) throw ContractError("labeled batch: no samples");
  const auto feats = static_cast<std::size_t>(data::kFeatures);
  LabeledBatch out;
  out.batch = refs.size();
  std::vector<double> wv(refs.size() * omega * feats);
  std::vector<std::size_t> days(refs.size());
  out.labels.resize(refs.size());
  for (std::size_t b = 0; b < refs.size(); ++b) {
    days[b] = refs[b].day;
    for (std::size_t t = 0; t < omega; ++t) {
      copy_minute(ds, refs[b].day, refs[b].start + t, wv, b * omega + t);
    }
    out.labels[b] =
        static_cast<int>(data::movement_label(ds, refs[b], omega, eps_hold).cls);
  }
  out.windows =
      num::Tensor::from_values({refs.size() * omega, feats}, std::move(wv));
  out.earnings = earnings_rows(ds, days);
  return out;
}

}  // namespace cet::pretrain
