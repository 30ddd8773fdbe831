#include "csfiqa/blocks.hpp"

#include <cmath>

namespace csfiqa {

Tensor multihead_attention(const Tensor& q_rows, const Tensor& kv_rows, const Tensor& wq,
                           const Tensor& bq, const Tensor& wk, const Tensor& bk,
                           const Tensor& wv, const Tensor& bv, const Tensor& wo,
                           const Tensor& bo, std::size_t heads) {
  const std::size_t dim = kv_rows.cols();
  if (dim % heads != 0) throw ConfigError("attention: dim not divisible by heads");
  const std::size_t dh = dim / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = linear(q_rows, wq, bq);
  Tensor k = linear(kv_rows, wk, bk);
  Tensor v = linear(kv_rows, wv, bv);

  std::vector<Tensor> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
    Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
    Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_scale);
    Tensor attn = softmax(scores, -1);
    head_out.push_back(matmul(attn, vh));
  }
  return linear(concat_cols(head_out), wo, bo);
}

double xavier_sigma(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
}

TransformerBlock TransformerBlock::create(ParamStore& store, const std::string& prefix,
                                          std::size_t dim, std::size_t heads, Rng& rng,
                                          bool frozen, double sigma) {
  const double sq = sigma < 0 ? xavier_sigma(dim, dim) : sigma;
  const double s1 = sigma < 0 ? xavier_sigma(dim, 4 * dim) : sigma;
  const double s2 = sigma < 0 ? xavier_sigma(4 * dim, dim) : sigma;
  TransformerBlock b;
  b.heads = heads;
  b.ln1_g = store.full(prefix + ".ln1.g", {dim}, 1.0, frozen);
  b.ln1_b = store.zeros(prefix + ".ln1.b", {dim}, frozen);
  b.wq = store.trunc_normal(prefix + ".attn.wq", {dim, dim}, sq, rng, frozen);
  b.bq = store.zeros(prefix + ".attn.bq", {dim}, frozen);
  b.wk = store.trunc_normal(prefix + ".attn.wk", {dim, dim}, sq, rng, frozen);
  b.bk = store.zeros(prefix + ".attn.bk", {dim}, frozen);
  b.wv = store.trunc_normal(prefix + ".attn.wv", {dim, dim}, sq, rng, frozen);
  b.bv = store.zeros(prefix + ".attn.bv", {dim}, frozen);
  b.wo = store.trunc_normal(prefix + ".attn.wo", {dim, dim}, sq, rng, frozen);
  b.bo = store.zeros(prefix + ".attn.bo", {dim}, frozen);
  b.ln2_g = store.full(prefix + ".ln2.g", {dim}, 1.0, frozen);
  b.ln2_b = store.zeros(prefix + ".ln2.b", {dim}, frozen);
  b.w1 = store.trunc_normal(prefix + ".mlp.w1", {dim, 4 * dim}, s1, rng, frozen);
  b.b1 = store.zeros(prefix + ".mlp.b1", {4 * dim}, frozen);
  b.w2 = store.trunc_normal(prefix + ".mlp.w2", {4 * dim, dim}, s2, rng, frozen);
  b.b2 = store.zeros(prefix + ".mlp.b2", {dim}, frozen);
  return b;
}

Tensor TransformerBlock::forward(const Tensor& x) const {
  Tensor h = layernorm(x, ln1_g, ln1_b);
  Tensor attn = multihead_attention(h, h, wq, bq, wk, bk, wv, bv, wo, bo, heads);
  Tensor x1 = add(x, attn);
  Tensor h2 = layernorm(x1, ln2_g, ln2_b);
  Tensor mlp = linear(gelu(linear(h2, w1, b1)), w2, b2);
  return add(x1, mlp);
}

}  // namespace csfiqa
