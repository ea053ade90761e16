#pragma once

#include <cstdint>
#include <vector>

#include "cet/datagen/dataset.hpp"
#include "cet/preprocess/windows.hpp"

namespace cet::data {

enum class Protocol { fraction_sweep, sector_split, day_decay };

// A labeled sample: window [start, start+omega) on a day, predicting the
// move from minute start+omega-1 to start+omega.
struct SampleRef {
  std::size_t day = 0;
  std::size_t start = 0;
  bool operator==(const SampleRef&) const = default;
};

struct SplitSpec {
  Protocol protocol = Protocol::fraction_sweep;
  std::size_t omega = 50;
  double fraction = 0.5;       // fraction_sweep: fine-tune share of the total
  double test_fraction = 0.2;  // fraction_sweep: held-out share
  int sector = 0;              // sector_split: which sector's row
  int day_offset = 2;          // day_decay: 2..5
  std::uint64_t seed = 0;
};

// finetune: pooled data for self-supervised fine-tuning (fraction_sweep's
// fine-tune set, sector_split's 60% pool, day_decay's 60% train set).
// head_train: sector_split only, the sector-specific 20% classifier slice.
// Sets from one call never overlap; the test prefix for fraction_sweep
// depends only on (seed, test_fraction), so it is identical across
// fractions.
struct Split {
  std::vector<SampleRef> finetune;
  std::vector<SampleRef> head_train;
  std::vector<SampleRef> test;
};

// All horizon-1 windows over days with the given offset, ordered by
// (day, start).
std::vector<SampleRef> labeled_windows(const DataSet& ds, std::size_t omega,
                                       int offset);

Split split_dataset(const DataSet& ds, const SplitSpec& spec);

prep::MovementLabel movement_label(const DataSet& ds, const SampleRef& ref,
                                   std::size_t omega, double eps_hold);

}  // namespace cet::data
