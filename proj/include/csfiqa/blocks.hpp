#pragma once

#include <string>

#include "csfiqa/ops.hpp"
#include "csfiqa/params.hpp"

namespace csfiqa {

double xavier_sigma(std::size_t fan_in, std::size_t fan_out);

// x W + b for row-major token matrices.
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_rowvec(matmul(x, w), b);
}

// Dense multi-head attention: Q from q_rows, K/V from kv_rows, h heads,
// scale 1/sqrt(dim/h).
Tensor multihead_attention(const Tensor& q_rows, const Tensor& kv_rows, const Tensor& wq,
                           const Tensor& bq, const Tensor& wk, const Tensor& bk,
                           const Tensor& wv, const Tensor& bv, const Tensor& wo,
                           const Tensor& bo, std::size_t heads);

// Pre-norm transformer block: x + MHSA(LN1 x); then x + MLP(LN2 x) with a
// GELU MLP at expansion 4.
struct TransformerBlock {
  Tensor ln1_g, ln1_b;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_g, ln2_b;
  Tensor w1, b1, w2, b2;
  std::size_t heads = 1;

  // sigma < 0 selects Xavier scaling per matrix, sqrt(2 / (fan_in + fan_out)).
  static TransformerBlock create(ParamStore& store, const std::string& prefix,
                                 std::size_t dim, std::size_t heads, Rng& rng,
                                 bool frozen = false, double sigma = 0.02);
  Tensor forward(const Tensor& x) const;
};

}  // namespace csfiqa
