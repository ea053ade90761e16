#pragma once

#include <span>
#include <vector>

namespace cet::prep {

// Which side of the threshold gets zeroed. `above` follows the source
// description (discard coefficients larger than lambda); `below` is
// conventional wavelet denoising.
enum class DwtMode { above, below };

// One orthonormal Haar analysis level:
//   approx[i] = (x[2i] + x[2i+1]) / sqrt(2), detail[i] = (x[2i] - x[2i+1]) / sqrt(2).
// An odd trailing element is carried into approx unchanged, which keeps the
// transform invertible for any length.
void haar_forward(std::span<const double> x, std::vector<double>& approx,
                  std::vector<double>& detail);

// Inverse of haar_forward for an output of length n.
std::vector<double> haar_inverse(std::span<const double> approx,
                                 std::span<const double> detail,
                                 std::size_t n);

// Multi-level Haar decompose, threshold detail coefficients, reconstruct.
// Requires series length >= 2^levels (ConfigError otherwise); levels >= 1.
std::vector<double> dwt_denoise(std::span<const double> series,
                                double lambda = 0.7, int levels = 2,
                                DwtMode mode = DwtMode::above);

}  // namespace cet::prep
