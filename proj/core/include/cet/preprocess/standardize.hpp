#pragma once

#include <span>
#include <vector>

namespace cet::prep {

struct ZStats {
  double mean = 0.0;
  double std = 0.0;  // population std
};

// Population statistics; call on training-partition data only.
ZStats compute_stats(std::span<const double> xs);

// (x - mean)/std. Degenerate std (< 1e-12) maps everything to zero.
// Throws NumericError on non-finite stats.
std::vector<double> zscore(std::span<const double> xs, const ZStats& stats);
void zscore_inplace(std::span<double> xs, const ZStats& stats);

}  // namespace cet::prep
