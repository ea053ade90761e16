#include "cet/numerics/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "cet/errors.hpp"

namespace cet::num {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  n->v.assign(numel(shape), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  std::fill(t.node_->v.begin(), t.node_->v.end(), value);
  return t;
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("from_values: shape " + shape_str(shape) + " wants " +
                     std::to_string(numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->v = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

std::size_t Tensor::rows() const {
  return node_->shape.size() >= 2 ? node_->shape[0] : 1;
}

std::size_t Tensor::cols() const {
  const auto& s = node_->shape;
  if (s.empty()) return 1;
  return s.size() >= 2 ? s[1] : s[0];
}

std::span<double> Tensor::values_mut() {
  if (node_->backprop) {
    throw ContractError("values_mut on an interior graph node");
  }
  return node_->v;
}

double Tensor::scalar_value() const {
  if (size() != 1) {
    throw ShapeError("scalar_value on tensor of shape " + shape_str(shape()));
  }
  return node_->v[0];
}

void Tensor::set_requires_grad(bool rg) {
  if (node_->backprop) {
    throw ContractError("set_requires_grad on an interior graph node");
  }
  node_->requires_grad = rg;
}

void Tensor::backward() {
  if (!node_) throw ContractError("backward on empty tensor");
  if (size() != 1) {
    throw ShapeError("backward requires a scalar root, got " +
                     shape_str(shape()));
  }
  if (!node_->requires_grad) {
    throw ContractError("backward on a tensor outside the gradient graph");
  }

  // Iterative post-order DFS for the topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  struct Frame {
    detail::Node* n;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({node_.get(), 0});
  seen.insert(node_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.n->parents.size()) {
      detail::Node* p = f.n->parents[f.next_parent++].get();
      if (p->requires_grad && seen.insert(p).second) {
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->g[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop();
  }
  // Free the graph: leaves keep their gradients, interior structure dies.
  for (detail::Node* n : order) {
    n->backprop = nullptr;
    n->parents.clear();
  }
}

}  // namespace cet::num
