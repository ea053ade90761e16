#include "cet/numerics/ops.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <stdexcept>

#include "cet/errors.hpp"

namespace cet::num {

namespace {

using detail::Node;

// Result-node builder. Parents are recorded only when the output is on
// the gradient path; taint always propagates.
Tensor make_out(Shape shape, std::vector<double> v,
                std::initializer_list<const Tensor*> parents) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->v = std::move(v);
  for (const Tensor* p : parents) {
    n->taint |= p->node()->taint;
    if (p->node()->requires_grad) n->requires_grad = true;
  }
  if (n->requires_grad) {
    for (const Tensor* p : parents) n->parents.push_back(p->node());
  }
  return Tensor(std::move(n));
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

bool has_nan(std::span<const double> v) {
  for (double x : v) {
    if (std::isnan(x)) return true;
  }
  return false;
}

}  // namespace

void mm_nn(const double* a, const double* b, double* c, std::size_t m,
           std::size_t k, std::size_t n, bool accumulate) {
  // Four output rows per pass reuse each loaded b row four times, which is
  // what keeps this kernel out of memory stalls on one core.
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    if (!accumulate) std::memset(c0, 0, 4 * n * sizeof(double));
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    for (std::size_t p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = brow[j];
        c0[j] += v0 * bv;
        c1[j] += v1 * bv;
        c2[j] += v2 * bv;
        c3[j] += v3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::memset(crow, 0, n * sizeof(double));
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

namespace {

// Fixed-order 8-lane dot product; breaks the serial reduction chain so the
// compiler can keep one SIMD accumulator per lane.
double dot8(const double* x, const double* y, std::size_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += x[j + l] * y[j + l];
  }
  double tail = 0.0;
  for (; j < n; ++j) tail += x[j] * y[j];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

}  // namespace

void mm_nt(const double* a, const double* b, double* c, std::size_t m,
           std::size_t n, std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double acc = dot8(arow, b + p * n, n);
      if (accumulate)
        crow[p] += acc;
      else
        crow[p] = acc;
    }
  }
}

void mm_tn(const double* a, const double* b, double* c, std::size_t m,
           std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, k * n * sizeof(double));
  // Fusing four rank-1 updates amortizes the c traffic over four b rows.
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    const double* b0 = b + i * n;
    const double* b1 = b0 + n;
    const double* b2 = b1 + n;
    const double* b3 = b2 + n;
    for (std::size_t p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
      if (v0 == 0.0 && v1 == 0.0 && v2 == 0.0 && v3 == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        crow[j] += v0 * b0[j] + v1 * b1[j] + v2 * b2[j] + v3 * b3[j];
      }
    }
  }
  for (; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions disagree " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<double> v(m * n);
  mm_nn(a.values().data(), b.values().data(), v.data(), m, k, n, false);
  Tensor out = make_out({m, n}, std::move(v), {&a, &b});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), an = a.node(),
                            bn = b.node(), m, k, n]() {
      if (an->requires_grad) {
        an->ensure_grad();
        mm_nt(on->g.data(), bn->v.data(), an->g.data(), m, n, k, true);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        mm_tn(an->v.data(), on->g.data(), bn->g.data(), m, k, n, true);
      }
    };
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t m = x.rows(), k = x.cols(), n = w.cols();
  if (k != w.rows() || b.size() != n) {
    throw ShapeError("linear: incompatible shapes x" + shape_str(x.shape()) +
                     " w" + shape_str(w.shape()) + " b" + shape_str(b.shape()));
  }
  std::vector<double> v(m * n);
  mm_nn(x.values().data(), w.values().data(), v.data(), m, k, n, false);
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = v.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += bv[j];
  }
  Tensor out = make_out({m, n}, std::move(v), {&x, &w, &b});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node(),
                            wn = w.node(), bn = b.node(), m, k, n]() {
      if (xn->requires_grad) {
        xn->ensure_grad();
        mm_nt(on->g.data(), wn->v.data(), xn->g.data(), m, n, k, true);
      }
      if (wn->requires_grad) {
        wn->ensure_grad();
        mm_tn(xn->v.data(), on->g.data(), wn->g.data(), m, k, n, true);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = on->g.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) bn->g[j] += grow[j];
        }
      }
    };
  }
  return out;
}

Tensor transpose(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> v(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) v[j * m + i] = x.at(i, j);
  Tensor out = make_out({n, m}, std::move(v), {&x});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node(), m, n]() {
      xn->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          xn->g[i * n + j] += on->g[j * m + i];
    };
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) + b.at(i);
  Tensor out = make_out(a.shape(), std::move(v), {&a, &b});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), an = a.node(),
                            bn = b.node()]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < on->g.size(); ++i) an->g[i] += on->g[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < on->g.size(); ++i) bn->g[i] += on->g[i];
      }
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) - b.at(i);
  Tensor out = make_out(a.shape(), std::move(v), {&a, &b});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), an = a.node(),
                            bn = b.node()]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < on->g.size(); ++i) an->g[i] += on->g[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < on->g.size(); ++i) bn->g[i] -= on->g[i];
      }
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) * b.at(i);
  Tensor out = make_out(a.shape(), std::move(v), {&a, &b});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), an = a.node(),
                            bn = b.node()]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < on->g.size(); ++i)
          an->g[i] += on->g[i] * bn->v[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < on->g.size(); ++i)
          bn->g[i] += on->g[i] * an->v[i];
      }
    };
  }
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  const std::size_t m = x.rows(), n = x.cols();
  if (b.size() != n) {
    throw ShapeError("add_bias: x" + shape_str(x.shape()) + " b" +
                     shape_str(b.shape()));
  }
  std::vector<double> v(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) v[i * n + j] += b.at(j);
  Tensor out = make_out(x.shape(), std::move(v), {&x, &b});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node(),
                            bn = b.node(), m, n]() {
      if (xn->requires_grad) {
        xn->ensure_grad();
        for (std::size_t i = 0; i < on->g.size(); ++i) xn->g[i] += on->g[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) bn->g[j] += on->g[i * n + j];
      }
    };
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * a.at(i);
  Tensor out = make_out(a.shape(), std::move(v), {&a});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), an = a.node(), c]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < on->g.size(); ++i) an->g[i] += c * on->g[i];
    };
  }
  return out;
}

Tensor tanh_op(const Tensor& x) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(x.at(i));
  Tensor out = make_out(x.shape(), std::move(v), {&x});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node()]() {
      xn->ensure_grad();
      for (std::size_t i = 0; i < on->g.size(); ++i)
        xn->g[i] += on->g[i] * (1.0 - on->v[i] * on->v[i]);
    };
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  static constexpr double kInvSqrt2 = 0.70710678118654752440;
  static constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double xi = x.at(i);
    v[i] = 0.5 * xi * (1.0 + std::erf(xi * kInvSqrt2));
  }
  Tensor out = make_out(x.shape(), std::move(v), {&x});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node()]() {
      xn->ensure_grad();
      for (std::size_t i = 0; i < on->g.size(); ++i) {
        const double xi = xn->v[i];
        const double cdf = 0.5 * (1.0 + std::erf(xi * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
        xn->g[i] += on->g[i] * (cdf + xi * pdf);
      }
    };
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  if (has_nan(x.values())) throw NumericError("softmax: NaN in input");
  const std::size_t m = x.rows(), n = x.cols();
  if (n == 0) throw ShapeError("softmax: empty row");
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.values().data() + i * n;
    double* orow = v.data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (std::size_t j = 0; j < n; ++j) orow[j] /= sum;
  }
  Tensor out = make_out(x.shape(), std::move(v), {&x});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node(), m, n]() {
      xn->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = on->v.data() + i * n;
        const double* gy = on->g.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
        double* gx = xn->g.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) gx[j] += y[j] * (gy[j] - dot);
      }
    };
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  const std::size_t m = logits.rows(), n = logits.cols();
  if (labels.size() != m) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(m) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) +
                              " outside [0," + std::to_string(n) + ")");
    }
  }
  if (has_nan(logits.values())) throw NumericError("cross_entropy: NaN logits");
  auto probs = std::make_shared<std::vector<double>>(m * n);
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = logits.values().data() + i * n;
    double* prow = probs->data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      prow[j] = std::exp(row[j] - mx);
      sum += prow[j];
    }
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < n; ++j) prow[j] /= sum;
    loss += lse - row[static_cast<std::size_t>(labels[i])];
  }
  loss /= static_cast<double>(m);
  Tensor out = make_out({1}, {loss}, {&logits});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), ln = logits.node(), probs,
                            labels, m, n]() {
      ln->ensure_grad();
      const double gscale = on->g[0] / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double* prow = probs->data() + i * n;
        double* grow = ln->g.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) grow[j] += gscale * prow[j];
        grow[static_cast<std::size_t>(labels[i])] -= gscale;
      }
    };
  }
  return out;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  check_same_shape("mse_loss", pred, target);
  const double invn = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.at(i) - target.at(i);
    loss += d * d;
  }
  Tensor out = make_out({1}, {loss * invn}, {&pred, &target});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), pn = pred.node(),
                            tn = target.node(), invn]() {
      const double s = 2.0 * invn * on->g[0];
      if (pn->requires_grad) {
        pn->ensure_grad();
        for (std::size_t i = 0; i < pn->v.size(); ++i)
          pn->g[i] += s * (pn->v[i] - tn->v[i]);
      }
      if (tn->requires_grad) {
        tn->ensure_grad();
        for (std::size_t i = 0; i < tn->v.size(); ++i)
          tn->g[i] -= s * (pn->v[i] - tn->v[i]);
      }
    };
  }
  return out;
}

Tensor masked_mse(const Tensor& pred, const Tensor& target,
                  const std::vector<std::uint8_t>& row_mask) {
  check_same_shape("masked_mse", pred, target);
  const std::size_t m = pred.rows(), n = pred.cols();
  if (row_mask.size() != m) {
    throw ShapeError("masked_mse: mask length " +
                     std::to_string(row_mask.size()) + " for " +
                     std::to_string(m) + " rows");
  }
  std::size_t masked = 0;
  for (auto f : row_mask) masked += f ? 1 : 0;
  if (masked == 0) throw ContractError("masked_mse: no masked rows");
  const double invn = 1.0 / static_cast<double>(masked * n);
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!row_mask[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = pred.at(i, j) - target.at(i, j);
      loss += d * d;
    }
  }
  Tensor out = make_out({1}, {loss * invn}, {&pred, &target});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), pn = pred.node(),
                            tn = target.node(), row_mask, invn, m, n]() {
      const double s = 2.0 * invn * on->g[0];
      if (pn->requires_grad) {
        pn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          if (!row_mask[i]) continue;
          for (std::size_t j = 0; j < n; ++j)
            pn->g[i * n + j] += s * (pn->v[i * n + j] - tn->v[i * n + j]);
        }
      }
      if (tn->requires_grad) {
        tn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          if (!row_mask[i]) continue;
          for (std::size_t j = 0; j < n; ++j)
            tn->g[i * n + j] -= s * (pn->v[i * n + j] - tn->v[i * n + j]);
        }
      }
    };
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  static constexpr double kEps = 1e-5;
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw ShapeError("layer_norm: x" + shape_str(x.shape()) + " gain" +
                     shape_str(gain.shape()) + " bias" +
                     shape_str(bias.shape()));
  }
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto inv = std::make_shared<std::vector<double>>(m);
  std::vector<double> v(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.values().data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = row[j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double iv = 1.0 / std::sqrt(var + kEps);
    (*inv)[i] = iv;
    for (std::size_t j = 0; j < n; ++j) {
      const double xh = (row[j] - mu) * iv;
      (*xhat)[i * n + j] = xh;
      v[i * n + j] = xh * gain.at(j) + bias.at(j);
    }
  }
  Tensor out = make_out(x.shape(), std::move(v), {&x, &gain, &bias});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node(),
                            gn = gain.node(), bn = bias.node(), xhat, inv, m,
                            n]() {
      const double invsz = 1.0 / static_cast<double>(n);
      if (xn->requires_grad) xn->ensure_grad();
      if (gn->requires_grad) gn->ensure_grad();
      if (bn->requires_grad) bn->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double* gy = on->g.data() + i * n;
        const double* xh = xhat->data() + i * n;
        if (gn->requires_grad || bn->requires_grad) {
          for (std::size_t j = 0; j < n; ++j) {
            if (gn->requires_grad) gn->g[j] += gy[j] * xh[j];
            if (bn->requires_grad) bn->g[j] += gy[j];
          }
        }
        if (xn->requires_grad) {
          double mean_dxh = 0.0, mean_dxh_xh = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double dxh = gy[j] * gn->v[j];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xh[j];
          }
          mean_dxh *= invsz;
          mean_dxh_xh *= invsz;
          double* gx = xn->g.data() + i * n;
          const double iv = (*inv)[i];
          for (std::size_t j = 0; j < n; ++j) {
            const double dxh = gy[j] * gn->v[j];
            gx[j] += iv * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
          }
        }
      }
    };
  }
  return out;
}

Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           std::size_t batch, std::size_t heads, bool causal) {
  check_same_shape("attention(q,k)", q, k);
  check_same_shape("attention(q,v)", q, v);
  const std::size_t rows = q.rows(), d = q.cols();
  if (batch == 0 || rows % batch != 0) {
    throw ShapeError("attention: rows " + std::to_string(rows) +
                     " not divisible by batch " + std::to_string(batch));
  }
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: model dim " + std::to_string(d) +
                     " not divisible by heads " + std::to_string(heads));
  }
  const std::size_t seq = rows / batch;
  const std::size_t dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

  auto probs = std::make_shared<std::vector<double>>(batch * heads * seq * seq,
                                                     0.0);
  std::vector<double> ov(rows * d, 0.0);
  const double* qv = q.values().data();
  const double* kv = k.values().data();
  const double* vv = v.values().data();
  std::vector<double> srow(seq);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t hoff = h * dh;
      double* pbh = probs->data() + (b * heads + h) * seq * seq;
      for (std::size_t t = 0; t < seq; ++t) {
        const std::size_t span = causal ? t + 1 : seq;
        const double* qrow = qv + (b * seq + t) * d + hoff;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < span; ++u) {
          const double* krow = kv + (b * seq + u) * d + hoff;
          double acc = 0.0;
          for (std::size_t j = 0; j < dh; ++j) acc += qrow[j] * krow[j];
          acc *= sc;
          if (std::isnan(acc)) throw NumericError("attention: NaN logits");
          srow[u] = acc;
          mx = std::max(mx, acc);
        }
        double sum = 0.0;
        for (std::size_t u = 0; u < span; ++u) {
          srow[u] = std::exp(srow[u] - mx);
          sum += srow[u];
        }
        double* prow = pbh + t * seq;
        double* orow = ov.data() + (b * seq + t) * d + hoff;
        for (std::size_t u = 0; u < span; ++u) {
          const double p = srow[u] / sum;
          prow[u] = p;
          const double* vrow = vv + (b * seq + u) * d + hoff;
          for (std::size_t j = 0; j < dh; ++j) orow[j] += p * vrow[j];
        }
      }
    }
  }

  Tensor out = make_out(q.shape(), std::move(ov), {&q, &k, &v});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), qn = q.node(),
                            kn = k.node(), vn = v.node(), probs, batch, heads,
                            seq, dh, d, sc, causal]() {
      qn->ensure_grad();
      kn->ensure_grad();
      vn->ensure_grad();
      std::vector<double> dprow(seq), dsrow(seq);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t hoff = h * dh;
          const double* pbh = probs->data() + (b * heads + h) * seq * seq;
          for (std::size_t t = 0; t < seq; ++t) {
            const std::size_t span = causal ? t + 1 : seq;
            const double* go = on->g.data() + (b * seq + t) * d + hoff;
            const double* prow = pbh + t * seq;
            // dV and dP
            double pdot = 0.0;
            for (std::size_t u = 0; u < span; ++u) {
              const double* vrow = vn->v.data() + (b * seq + u) * d + hoff;
              double acc = 0.0;
              for (std::size_t j = 0; j < dh; ++j) acc += go[j] * vrow[j];
              dprow[u] = acc;
              pdot += acc * prow[u];
              double* gvrow = vn->g.data() + (b * seq + u) * d + hoff;
              const double p = prow[u];
              for (std::size_t j = 0; j < dh; ++j) gvrow[j] += p * go[j];
            }
            // softmax backward, then into Q and K
            const double* qrow = qn->v.data() + (b * seq + t) * d + hoff;
            double* gqrow = qn->g.data() + (b * seq + t) * d + hoff;
            for (std::size_t u = 0; u < span; ++u) {
              const double ds = prow[u] * (dprow[u] - pdot) * sc;
              if (ds == 0.0) continue;
              const double* krow = kn->v.data() + (b * seq + u) * d + hoff;
              double* gkrow = kn->g.data() + (b * seq + u) * d + hoff;
              for (std::size_t j = 0; j < dh; ++j) {
                gqrow[j] += ds * krow[j];
                gkrow[j] += ds * qrow[j];
              }
            }
          }
        }
      }
    };
  }
  return out;
}

Tensor take_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  const std::size_t m = x.rows(), n = x.cols();
  for (auto i : idx) {
    if (i >= m) {
      throw std::out_of_range("take_rows: index " + std::to_string(i) +
                              " outside [0," + std::to_string(m) + ")");
    }
  }
  std::vector<double> v(idx.size() * n);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::memcpy(v.data() + r * n, x.values().data() + idx[r] * n,
                n * sizeof(double));
  }
  Tensor out = make_out({idx.size(), n}, std::move(v), {&x});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node(), idx, n]() {
      xn->ensure_grad();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const double* grow = on->g.data() + r * n;
        double* gx = xn->g.data() + idx[r] * n;
        for (std::size_t j = 0; j < n; ++j) gx[j] += grow[j];
      }
    };
  }
  return out;
}

Tensor blend_rows(const Tensor& x, const std::vector<std::uint8_t>& row_mask,
                  const Tensor& m) {
  const std::size_t rows = x.rows(), n = x.cols();
  if (row_mask.size() != rows || m.size() != n) {
    throw ShapeError("blend_rows: x" + shape_str(x.shape()) + " mask " +
                     std::to_string(row_mask.size()) + " m" +
                     shape_str(m.shape()));
  }
  std::vector<double> v(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_mask[i]) {
      std::memcpy(v.data() + i * n, m.values().data(), n * sizeof(double));
    }
  }
  Tensor out = make_out(x.shape(), std::move(v), {&x, &m});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node(),
                            mn = m.node(), row_mask, rows, n]() {
      if (xn->requires_grad) xn->ensure_grad();
      if (mn->requires_grad) mn->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i) {
        const double* grow = on->g.data() + i * n;
        if (row_mask[i]) {
          if (mn->requires_grad)
            for (std::size_t j = 0; j < n; ++j) mn->g[j] += grow[j];
        } else {
          if (xn->requires_grad)
            for (std::size_t j = 0; j < n; ++j) xn->g[i * n + j] += grow[j];
        }
      }
    };
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), p = a.cols(), q = b.cols();
  if (b.rows() != m) {
    throw ShapeError("concat_cols: row mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  std::vector<double> v(m * (p + q));
  for (std::size_t i = 0; i < m; ++i) {
    std::memcpy(v.data() + i * (p + q), a.values().data() + i * p,
                p * sizeof(double));
    std::memcpy(v.data() + i * (p + q) + p, b.values().data() + i * q,
                q * sizeof(double));
  }
  Tensor out = make_out({m, p + q}, std::move(v), {&a, &b});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), an = a.node(),
                            bn = b.node(), m, p, q]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < p; ++j)
            an->g[i * p + j] += on->g[i * (p + q) + j];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < q; ++j)
            bn->g[i * q + j] += on->g[i * (p + q) + p + j];
      }
    };
  }
  return out;
}

Tensor grouped_dot(const Tensor& z, const Tensor& c, std::size_t group) {
  const std::size_t zr = z.rows(), d = z.cols(), b = c.rows();
  if (c.cols() != d || group == 0 || zr != b * group) {
    throw ShapeError("grouped_dot: z" + shape_str(z.shape()) + " c" +
                     shape_str(c.shape()) + " group " + std::to_string(group));
  }
  std::vector<double> v(b * group);
  for (std::size_t i = 0; i < b; ++i) {
    const double* crow = c.values().data() + i * d;
    for (std::size_t j = 0; j < group; ++j) {
      const double* zrow = z.values().data() + (i * group + j) * d;
      double acc = 0.0;
      for (std::size_t t = 0; t < d; ++t) acc += zrow[t] * crow[t];
      v[i * group + j] = acc;
    }
  }
  Tensor out = make_out({b, group}, std::move(v), {&z, &c});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), zn = z.node(),
                            cn = c.node(), b, group, d]() {
      if (zn->requires_grad) zn->ensure_grad();
      if (cn->requires_grad) cn->ensure_grad();
      for (std::size_t i = 0; i < b; ++i) {
        const double* crow = cn->v.data() + i * d;
        double* gcrow = cn->requires_grad ? cn->g.data() + i * d : nullptr;
        for (std::size_t j = 0; j < group; ++j) {
          const double gij = on->g[i * group + j];
          if (gij == 0.0) continue;
          const double* zrow = zn->v.data() + (i * group + j) * d;
          if (zn->requires_grad) {
            double* gzrow = zn->g.data() + (i * group + j) * d;
            for (std::size_t t = 0; t < d; ++t) gzrow[t] += gij * crow[t];
          }
          if (gcrow) {
            for (std::size_t t = 0; t < d; ++t) gcrow[t] += gij * zrow[t];
          }
        }
      }
    };
  }
  return out;
}

Tensor l2_normalize_rows(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  auto norms = std::make_shared<std::vector<double>>(m);
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.values().data() + i * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * row[j];
    const double nrm = std::sqrt(s);
    if (nrm < 1e-12) throw NumericError("l2_normalize_rows: zero row");
    (*norms)[i] = nrm;
    for (std::size_t j = 0; j < n; ++j) v[i * n + j] = row[j] / nrm;
  }
  Tensor out = make_out(x.shape(), std::move(v), {&x});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node(), norms, m,
                            n]() {
      xn->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = on->v.data() + i * n;
        const double* gy = on->g.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
        double* gx = xn->g.data() + i * n;
        const double inv = 1.0 / (*norms)[i];
        for (std::size_t j = 0; j < n; ++j)
          gx[j] += (gy[j] - y[j] * dot) * inv;
      }
    };
  }
  return out;
}

Tensor mean_all(const Tensor& x) {
  const double invn = 1.0 / static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.at(i);
  Tensor out = make_out({1}, {s * invn}, {&x});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node(), invn]() {
      xn->ensure_grad();
      const double g = on->g[0] * invn;
      for (std::size_t i = 0; i < xn->g.size(); ++i) xn->g[i] += g;
    };
  }
  return out;
}

Tensor sum_squares(const Tensor& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.at(i) * x.at(i);
  Tensor out = make_out({1}, {s}, {&x});
  if (out.requires_grad()) {
    out.node()->backprop = [on = out.node().get(), xn = x.node()]() {
      xn->ensure_grad();
      const double g = 2.0 * on->g[0];
      for (std::size_t i = 0; i < xn->g.size(); ++i) xn->g[i] += g * xn->v[i];
    };
  }
  return out;
}

}  // namespace cet::num
