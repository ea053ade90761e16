#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cet::num {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t numel(const Shape& s);

// Provenance bits, OR-propagated through every op. Used to assert
// information-flow contracts (e.g. a price-only model must never touch
// earnings inputs anywhere in its graph).
inline constexpr std::uint32_t kTaintEarnings = 1u << 0;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> v;  // row-major values
  std::vector<double> g;  // gradient; empty until needed
  bool requires_grad = false;
  std::uint32_t taint = 0;
  std::vector<std::shared_ptr<Node>> parents;
  // Accumulates this node's gradient into the parents' gradients.
  // Cleared (together with parents) after each backward pass: the graph
  // is define-by-run and lives for exactly one forward/backward cycle.
  std::function<void()> backprop;

  void ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), 0.0);
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->v.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  // rank-2 accessors (rank-1 tensors are treated as a single row)
  std::size_t rows() const;
  std::size_t cols() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg);
  std::uint32_t taint() const { return node_->taint; }
  void add_taint(std::uint32_t bits) { node_->taint |= bits; }

  std::span<const double> values() const { return node_->v; }
  // Raw write access to a leaf's storage (optimizer updates, data loading).
  // Must not be used on interior graph nodes.
  std::span<double> values_mut();
  std::span<const double> grad() const { return node_->g; }
  bool has_grad() const { return !node_->g.empty(); }

  double at(std::size_t flat) const { return node_->v[flat]; }
  double at(std::size_t r, std::size_t c) const {
    return node_->v[r * cols() + c];
  }
  double scalar_value() const;

  void zero_grad() {
    if (node_) node_->g.assign(node_->v.size(), 0.0);
  }

  // Reverse-mode sweep from a scalar root. Populates grad for every
  // requires_grad tensor on the active graph, then frees the graph.
  void backward();

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

}  // namespace cet::num
