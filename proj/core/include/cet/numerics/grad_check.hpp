#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cet/numerics/rng.hpp"
#include "cet/numerics/tensor.hpp"

namespace cet::num {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::size_t worst_param = 0;
  std::size_t worst_coord = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central-difference check of d(loss)/d(param) against reverse-mode grads.
//
// loss_fn must rebuild the graph from the current leaf values on every call
// and return a scalar. Relative error per coordinate is
//   |analytic - numeric| / max(1, |analytic|).
// When max_coords_per_param > 0 and a parameter is larger than that, a
// subset of coordinates is sampled with rng (required in that case).
GradCheckResult finite_diff_check(const std::function<Tensor()>& loss_fn,
                                  std::vector<Tensor> params, double h = 1e-5,
                                  std::size_t max_coords_per_param = 0,
                                  Rng* rng = nullptr);

}  // namespace cet::num
