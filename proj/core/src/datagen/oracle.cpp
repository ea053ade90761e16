#include "cet/datagen/oracle.hpp"

#include <cmath>
#include <cstddef>

#include "cet/errors.hpp"
#include "cet/numerics/adam.hpp"
#include "cet/numerics/ops.hpp"
#include "cet/numerics/tensor.hpp"

namespace cet::data {

OracleResult earnings_sign_oracle(const DataSet& ds, int steps, double lr) {
  std::vector<double> xs;
  std::vector<int> ys;
  for (std::size_t eq = 0; eq < ds.earnings_std.size(); ++eq) {
    if (ds.earnings_std[eq].empty()) continue;
    xs.insert(xs.end(), ds.earnings_std[eq].begin(),
              ds.earnings_std[eq].end());
    ys.push_back(ds.signal[eq] > 0.0 ? 1 : 0);
  }
  if (ys.empty()) throw DataError("earnings_sign_oracle: no earnings vectors");
  const std::size_t n = ys.size();

  using num::Tensor;
  const Tensor x = Tensor::from_values(
      {n, static_cast<std::size_t>(kEarningsDim)}, xs, false);
  Tensor w =
      Tensor::zeros({static_cast<std::size_t>(kEarningsDim), 2}, true);
  Tensor b = Tensor::zeros({2}, true);
  num::Adam opt({w, b}, {.lr = lr});
  for (int s = 0; s < steps; ++s) {
    opt.zero_grad();
    Tensor loss = num::cross_entropy(num::linear(x, w, b), ys);
    loss.backward();
    opt.step();
  }

  const Tensor logits = num::linear(x, w, b);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int pred = logits.at(i, 1) > logits.at(i, 0) ? 1 : 0;
    hits += pred == ys[i] ? 1u : 0u;
  }
  return {static_cast<double>(hits) / static_cast<double>(n), n};
}

std::vector<double> day_sign_match(const DataSet& ds) {
  std::vector<double> match(5, 0.0);
  std::vector<std::size_t> count(5, 0);
  for (std::size_t d = 0; d < ds.day_count(); ++d) {
    const DayRecord& rec = ds.days[d];
    if (rec.offset < 1 || rec.offset > 5 || rec.quarter < 0) continue;
    const double s = ds.signal[ds.eq_index(rec.company, rec.quarter)];
    const auto& close = ds.close_raw[d];
    const double move = std::log(close.back() / close.front());
    const auto i = static_cast<std::size_t>(rec.offset - 1);
    match[i] += (move > 0.0) == (s > 0.0) ? 1.0 : 0.0;
    ++count[i];
  }
  for (std::size_t i = 0; i < 5; ++i) {
    if (count[i] > 0) match[i] /= static_cast<double>(count[i]);
  }
  return match;
}

}  // namespace cet::data
