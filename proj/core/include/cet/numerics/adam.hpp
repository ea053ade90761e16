#pragma once

#include <cstddef>
#include <vector>

#include "cet/numerics/tensor.hpp"

namespace cet::num {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Coupled L2: g <- g + weight_decay * theta before the moment update.
  double weight_decay = 0.0;
};

// Adam over a fixed set of leaf parameters. Moment buffers are owned here,
// so one optimizer instance must live for the whole training run.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg);

  // Applies one update from the gradients currently on the parameters.
  // Throws ContractError if any parameter has no gradient buffer.
  void step();

  void zero_grad();

  std::size_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
};

}  // namespace cet::num
