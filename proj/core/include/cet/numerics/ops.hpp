#pragma once

#include <cstdint>
#include <vector>

#include "cet/numerics/tensor.hpp"

namespace cet::num {

// Dense kernels (row-major). accumulate=false overwrites c.
void mm_nn(const double* a, const double* b, double* c, std::size_t m,
           std::size_t k, std::size_t n, bool accumulate);
// c[m x k] (+)= a[m x n] * b[k x n]^T
void mm_nt(const double* a, const double* b, double* c, std::size_t m,
           std::size_t n, std::size_t k, bool accumulate);
// c[k x n] (+)= a[m x k]^T * b[m x n]
void mm_tn(const double* a, const double* b, double* c, std::size_t m,
           std::size_t k, std::size_t n, bool accumulate);

// --- autodiff ops -----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
// x[n x p] * w[p x q] + b[q], the basic affine layer
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);       // same shape
Tensor sub(const Tensor& a, const Tensor& b);       // same shape
Tensor mul(const Tensor& a, const Tensor& b);       // elementwise
Tensor add_bias(const Tensor& x, const Tensor& b);  // row broadcast
Tensor scale(const Tensor& a, double c);

Tensor tanh_op(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form

// Row-wise softmax with max-subtraction; rank-1 input is one row.
Tensor softmax(const Tensor& x);
// Mean over rows of -log softmax(logits[i])[labels[i]].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);
// Mean squared error over all elements.
Tensor mse_loss(const Tensor& pred, const Tensor& target);
// MSE restricted to rows with row_mask[i] != 0; mean over masked elements.
Tensor masked_mse(const Tensor& pred, const Tensor& target,
                  const std::vector<std::uint8_t>& row_mask);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

// Multi-head scaled dot-product self-attention over `batch` packed
// sequences of length seq = rows/batch. If causal, position t attends
// only to positions <= t of its own sequence.
Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           std::size_t batch, std::size_t heads, bool causal);

Tensor take_rows(const Tensor& x, const std::vector<std::size_t>& idx);
// Replace rows flagged in row_mask by the learned vector m.
Tensor blend_rows(const Tensor& x, const std::vector<std::uint8_t>& row_mask,
                  const Tensor& m);
Tensor concat_cols(const Tensor& a, const Tensor& b);

// out[b, j] = dot(z[b*group + j], c[b])
Tensor grouped_dot(const Tensor& z, const Tensor& c, std::size_t group);

Tensor l2_normalize_rows(const Tensor& x);

Tensor mean_all(const Tensor& x);
Tensor sum_squares(const Tensor& x);

}  // namespace cet::num
