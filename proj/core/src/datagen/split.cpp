#include "cet/datagen/split.hpp"

#include <algorithm>
#include <cmath>

#include "cet/errors.hpp"
#include "cet/numerics/rng.hpp"

namespace cet::data {

namespace {

constexpr std::uint64_t kSplitStream = 7;

std::uint64_t sid(std::uint64_t a, std::uint64_t b) {
  return (kSplitStream << 48) ^ (a << 24) ^ b;
}

void shuffle_refs(std::vector<SampleRef>& refs, std::uint64_t seed) {
  num::Rng rng(seed);
  rng.shuffle(refs);
}

std::size_t share(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
}

}  // namespace

std::vector<SampleRef> labeled_windows(const DataSet& ds, std::size_t omega,
                                       int offset) {
  if (omega == 0 || omega + 1 > static_cast<std::size_t>(kMinutes)) {
    throw ConfigError("labeled_windows: omega out of range");
  }
  std::vector<SampleRef> out;
  const std::size_t starts = static_cast<std::size_t>(kMinutes) - omega;
  for (std::size_t d = 0; d < ds.day_count(); ++d) {
    if (ds.days[d].offset != offset) continue;
    for (std::size_t s = 0; s < starts; ++s) out.push_back({d, s});
  }
  return out;
}

Split split_dataset(const DataSet& ds, const SplitSpec& spec) {
  Split split;
  switch (spec.protocol) {
    case Protocol::fraction_sweep: {
      if (spec.fraction <= 0.0 || spec.test_fraction <= 0.0 ||
          spec.fraction + spec.test_fraction > 1.0 + 1e-12) {
        throw ConfigError("fraction_sweep: fraction + test_fraction > 1");
      }
      std::vector<SampleRef> all = labeled_windows(ds, spec.omega, 1);
      shuffle_refs(all, num::derive_seed(spec.seed, sid(0, 0)));
      const std::size_t n_test = share(all.size(), spec.test_fraction);
      const std::size_t n_ft = share(all.size(), spec.fraction);
      if (n_test + n_ft > all.size()) {
        throw ConfigError("fraction_sweep: split exceeds sample count");
      }
      split.test.assign(all.begin(), all.begin() + n_test);
      split.finetune.assign(all.begin() + n_test,
                            all.begin() + n_test + n_ft);
      break;
    }
    case Protocol::sector_split: {
      if (spec.sector < 0 ||
          spec.sector >= static_cast<int>(ds.sectors.size())) {
        throw ConfigError("sector_split: sector index out of range");
      }
      const std::vector<SampleRef> all = labeled_windows(ds, spec.omega, 1);
      for (int s = 0; s < static_cast<int>(ds.sectors.size()); ++s) {
        std::vector<SampleRef> sector_refs;
        for (const SampleRef& ref : all) {
          const int c = ds.days[ref.day].company;
          if (ds.companies[static_cast<std::size_t>(c)].sector == s) {
            sector_refs.push_back(ref);
          }
        }
        shuffle_refs(sector_refs,
                     num::derive_seed(spec.seed,
                                      sid(1, static_cast<std::uint64_t>(s))));
        const std::size_t n60 = share(sector_refs.size(), 0.6);
        const std::size_t n80 = share(sector_refs.size(), 0.8);
        split.finetune.insert(split.finetune.end(), sector_refs.begin(),
                              sector_refs.begin() + n60);
        if (s == spec.sector) {
          split.head_train.assign(sector_refs.begin() + n60,
                                  sector_refs.begin() + n80);
          split.test.assign(sector_refs.begin() + n80, sector_refs.end());
        }
      }
      break;
    }
    case Protocol::day_decay: {
      if (spec.day_offset < 2 || spec.day_offset > 5) {
        throw ConfigError("day_decay: day_offset must be 2..5");
      }
      std::vector<SampleRef> all =
          labeled_windows(ds, spec.omega, spec.day_offset);
      shuffle_refs(
          all, num::derive_seed(
                   spec.seed,
                   sid(2, static_cast<std::uint64_t>(spec.day_offset))));
      const std::size_t n60 = share(all.size(), 0.6);
      split.finetune.assign(all.begin(), all.begin() + n60);
      split.test.assign(all.begin() + n60, all.end());
      break;
    }
  }
  return split;
}

prep::MovementLabel movement_label(const DataSet& ds, const SampleRef& ref,
                                   std::size_t omega, double eps_hold) {
  const auto& close = ds.close_raw[ref.day];
  return prep::label_movement(close[ref.start + omega - 1],
                              close[ref.start + omega], eps_hold);
}

}  // namespace cet::data
