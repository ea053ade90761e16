#pragma once

#include "cet/datagen/dataset.hpp"
#include "cet/harness/config.hpp"
#include "cet/harness/report.hpp"

namespace cet::harness {

// Generates the synthetic dataset, or ingests the CSV pair when both paths
// are set.
data::DataSet load_dataset(const ExperimentConfig& cfg);

// The four experiment protocols. Shared contract:
//   - each self-supervised kind is pre-trained once (master_seed), then
//     fine-tuned per run seed; supervised kinds train from scratch per seed;
//   - test refs are asserted disjoint from every training set in the run;
//   - a model whose pre-training or fine-tuning throws keeps its grid cells
//     with ok = false and the error text in note (partial reports);
//   - identical config and seeds reproduce the report bit for bit.

// Fine-tune fraction rows (x test_fraction held out once, common to all
// fractions) against every model column.
ExperimentReport run_fraction_sweep(const data::DataSet& ds,
                                    const ExperimentConfig& cfg);

// Per-sector rows: pooled 60% unfrozen fine-tune (shared across sectors),
// then a fresh frozen head per sector on that sector's 20% slice, tested on
// its final 20%. Supervised kinds train on pooled 60% + sector 20%.
// A sector with no head-train or test windows is annotated and skipped.
ExperimentReport run_sector_split(const data::DataSet& ds,
                                  const ExperimentConfig& cfg);

// Day rows 2..5. Self-supervised kinds carry weights forward day over day
// (continuous fine-tuning, current day's 60% only); supervised kinds
// retrain fresh each day.
ExperimentReport run_day_decay(const data::DataSet& ds,
                               const ExperimentConfig& cfg);

// K = 1..k_max horizon sweep of CET pre-training: equilibrium InfoNCE loss,
// equilibrium validation cosine, and accuracy after a 50% fine-tune at
// seeds[0]. Models other than CET are ignored.
ExperimentReport run_ablation(const data::DataSet& ds,
                              const ExperimentConfig& cfg);

// Dispatch on cfg.protocol: fractions | sectors | days | ablation.
ExperimentReport run_protocol(const data::DataSet& ds,
                              const ExperimentConfig& cfg);

}  // namespace cet::harness
