#include "cet/numerics/grad_check.hpp"

#include <cmath>
#include <numeric>

#include "cet/errors.hpp"

namespace cet::num {

GradCheckResult finite_diff_check(const std::function<Tensor()>& loss_fn,
                                  std::vector<Tensor> params, double h,
                                  std::size_t max_coords_per_param, Rng* rng) {
  if (h <= 0.0) throw ContractError("finite_diff_check: h must be positive");

  for (Tensor& p : params) p.zero_grad();
  Tensor loss = loss_fn();
  loss.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor& p : params) {
    if (!p.has_grad()) {
      throw ContractError("finite_diff_check: no gradient on parameter of shape " +
                          shape_str(p.shape()));
    }
    auto g = p.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    std::vector<std::size_t> coords;
    if (max_coords_per_param > 0 && p.size() > max_coords_per_param) {
      if (rng == nullptr) {
        throw ContractError("finite_diff_check: coordinate sampling needs an rng");
      }
      coords = rng->sample_without_replacement(p.size(), max_coords_per_param);
    } else {
      coords.resize(p.size());
      std::iota(coords.begin(), coords.end(), std::size_t{0});
    }
    for (std::size_t c : coords) {
      auto theta = p.values_mut();
      const double orig = theta[c];
      theta[c] = orig + h;
      const double lp = loss_fn().scalar_value();
      p.values_mut()[c] = orig - h;
      const double lm = loss_fn().scalar_value();
      p.values_mut()[c] = orig;

      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[pi][c];
      const double rel = std::fabs(a - numeric) / std::max(1.0, std::fabs(a));
      ++res.coords_checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = pi;
        res.worst_coord = c;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace cet::num
