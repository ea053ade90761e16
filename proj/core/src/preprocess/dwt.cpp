#include "cet/preprocess/dwt.hpp"

#include <cmath>

#include "cet/errors.hpp"

namespace cet::prep {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
}

void haar_forward(std::span<const double> x, std::vector<double>& approx,
                  std::vector<double>& detail) {
  const std::size_t pairs = x.size() / 2;
  const bool odd = (x.size() % 2) != 0;
  approx.resize(pairs + (odd ? 1 : 0));
  detail.resize(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    approx[i] = (x[2 * i] + x[2 * i + 1]) / kSqrt2;
    detail[i] = (x[2 * i] - x[2 * i + 1]) / kSqrt2;
  }
  if (odd) approx[pairs] = x[x.size() - 1];
}

std::vector<double> haar_inverse(std::span<const double> approx,
                                 std::span<const double> detail,
                                 std::size_t n) {
  const std::size_t pairs = n / 2;
  const bool odd = (n % 2) != 0;
  if (approx.size() != pairs + (odd ? 1 : 0) || detail.size() != pairs) {
    throw ContractError("haar_inverse: coefficient lengths do not match n");
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < pairs; ++i) {
    x[2 * i] = (approx[i] + detail[i]) / kSqrt2;
    x[2 * i + 1] = (approx[i] - detail[i]) / kSqrt2;
  }
  if (odd) x[n - 1] = approx[pairs];
  return x;
}

std::vector<double> dwt_denoise(std::span<const double> series, double lambda,
                                int levels, DwtMode mode) {
  if (levels < 1) throw ConfigError("dwt_denoise: levels must be >= 1");
  const auto min_len = static_cast<std::size_t>(1) << levels;
  if (series.size() < min_len) {
    throw ConfigError("dwt_denoise: series length " +
                      std::to_string(series.size()) + " too short for " +
                      std::to_string(levels) + " levels (need >= " +
                      std::to_string(min_len) + ")");
  }

  // Analysis: peel off one detail band per level.
  std::vector<std::vector<double>> details(static_cast<std::size_t>(levels));
  std::vector<std::size_t> lens(static_cast<std::size_t>(levels));
  std::vector<double> approx(series.begin(), series.end());
  for (int l = 0; l < levels; ++l) {
    lens[static_cast<std::size_t>(l)] = approx.size();
    std::vector<double> next;
    haar_forward(approx, next, details[static_cast<std::size_t>(l)]);
    approx = std::move(next);
  }

  for (auto& band : details) {
    for (double& d : band) {
      const bool zero = (mode == DwtMode::above) ? (std::fabs(d) > lambda)
                                                 : (std::fabs(d) < lambda);
      if (zero) d = 0.0;
    }
  }

  // Synthesis in reverse order.
  for (int l = levels - 1; l >= 0; --l) {
    approx = haar_inverse(approx, details[static_cast<std::size_t>(l)],
                          lens[static_cast<std::size_t>(l)]);
  }
  return approx;
}

}  // namespace cet::prep
