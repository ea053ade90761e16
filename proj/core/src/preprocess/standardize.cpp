#include "cet/preprocess/standardize.hpp"

#include <cmath>

#include "cet/errors.hpp"

namespace cet::prep {

ZStats compute_stats(std::span<const double> xs) {
  if (xs.empty()) throw DataError("compute_stats: empty series");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    var += d * d;
  }
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

void zscore_inplace(std::span<double> xs, const ZStats& stats) {
  if (!std::isfinite(stats.mean) || !std::isfinite(stats.std)) {
    throw NumericError("zscore: non-finite statistics");
  }
  if (stats.std < 1e-12) {
    for (double& x : xs) x = 0.0;
    return;
  }
  const double inv = 1.0 / stats.std;
  for (double& x : xs) x = (x - stats.mean) * inv;
}

std::vector<double> zscore(std::span<const double> xs, const ZStats& stats) {
  std::vector<double> out(xs.begin(), xs.end());
  zscore_inplace(out, stats);
  return out;
}

}  // namespace cet::prep
