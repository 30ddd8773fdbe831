#pragma once

#include <cstdint>
#include <vector>

#include "csfiqa/tensor.hpp"

namespace csfiqa {

// Elementwise.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor sqrt_t(const Tensor& a);
Tensor reciprocal(const Tensor& a);
Tensor clamp_min(const Tensor& a, double lo);
Tensor gelu(const Tensor& a);

// Shape.
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor transpose(const Tensor& a);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1);
Tensor row(const Tensor& a, std::size_t r);          // -> [d]
Tensor element(const Tensor& a, std::size_t i);      // -> scalar
Tensor mean_rows(const Tensor& a, const std::vector<std::size_t>& indices);  // -> [d]

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor dot(const Tensor& u, const Tensor& v);        // -> scalar
Tensor add_rowvec(const Tensor& m, const Tensor& v);
// Broadcast-multiply a tensor by a scalar tensor (both sides differentiable).
Tensor scale_by(const Tensor& a, const Tensor& s);

// Reductions.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Softmax over the trailing axis of a 1-D or 2-D tensor (axis = -1), or over
// axis 0 of a 2-D tensor. Max-subtraction for overflow stability.
Tensor softmax(const Tensor& a, int axis = -1);
// keep has one flag per element; dropped positions are exactly 0 in the
// output. Throws InvalidMaskError if a slice has no kept entry.
Tensor masked_softmax(const Tensor& a, const std::vector<std::uint8_t>& keep, int axis = -1);

// Per-row layer normalization with learnable gain/bias vectors.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps = 1e-5);

// Mean absolute error over all elements.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

// Strict cosine similarity; throws NumericError on a zero-norm input.
Tensor cosine_sim(const Tensor& u, const Tensor& v);
// Training-path variant: clamps the norm product below at eps^2, exact for
// non-degenerate inputs and differentiable everywhere.
Tensor cosine_sim_eps(const Tensor& u, const Tensor& v, double eps = 1e-8);
// v / max(||v||, eps).
Tensor l2_normalize(const Tensor& v, double eps = 1e-8);

bool all_finite(const Tensor& a);

}  // namespace csfiqa
