#include "csfiqa/decoder.hpp"

namespace csfiqa {

DecoderHead DecoderHead::create(ParamStore& store, const std::string& prefix,
                                std::size_t dim_small, std::size_t dim_large,
                                std::size_t depth, std::size_t heads, Rng& rng) {
  DecoderHead d;
  d.align_w = store.trunc_normal(prefix + ".align.w", {dim_small, dim_large},
                                 xavier_sigma(dim_small, dim_large), rng);
  d.align_b = store.zeros(prefix + ".align.b", {dim_large});
  d.fuse_w = store.trunc_normal(prefix + ".fuse.w", {2 * dim_large, dim_large},
                                xavier_sigma(2 * dim_large, dim_large), rng);
  d.fuse_b = store.zeros(prefix + ".fuse.b", {dim_large});
  d.query = store.trunc_normal(prefix + ".query", {1, dim_large}, 0.02, rng);
  for (std::size_t l = 0; l < depth; ++l)
    d.blocks.push_back(TransformerBlock::create(store, prefix + ".blk" + std::to_string(l),
                                                dim_large, heads, rng, /*frozen=*/false,
                                                /*sigma=*/-1.0));
  d.head_w1 = store.trunc_normal(prefix + ".head.w1", {dim_large, dim_large},
                                 xavier_sigma(dim_large, dim_large), rng);
  d.head_b1 = store.zeros(prefix + ".head.b1", {dim_large});
  d.head_w2 = store.trunc_normal(prefix + ".head.w2", {dim_large, 1},
                                 xavier_sigma(dim_large, 1), rng);
  d.head_b2 = store.zeros(prefix + ".head.b2", {1});
  return d;
}

Tensor DecoderHead::align(const Tensor& f_small, const Tensor& f_large) const {
  Tensor aligned = linear(reshape(f_small, {1, f_small.numel()}), align_w, align_b);
  Tensor cat = concat_cols({reshape(f_large, {1, f_large.numel()}), aligned});
  return row(linear(cat, fuse_w, fuse_b), 0);
}

Tensor DecoderHead::decode(const Tensor& fused) const {
  // The query token attends to the fused feature; each block sees the
  // two-row sequence [query; fused] and we read the query row back out.
  Tensor x = concat_rows({query, reshape(fused, {1, fused.numel()})});
  for (const TransformerBlock& blk : blocks) x = blk.forward(x);
  Tensor q = slice_rows(x, 0, 1);
  Tensor h = gelu(linear(q, head_w1, head_b1));
  return reshape(linear(h, head_w2, head_b2), {1});
}

}  // namespace csfiqa
