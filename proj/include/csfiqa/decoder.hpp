#pragma once

#include "csfiqa/blocks.hpp"
#include "csfiqa/config.hpp"

namespace csfiqa {

// Fuses the two branches' SFA outputs and decodes a scalar quality score.
struct DecoderHead {
  // Alignment: project f_small to dim_large, concat [f_large; aligned_small],
  // fuse back to dim_large.
  Tensor align_w, align_b;
  Tensor fuse_w, fuse_b;
  // Decoder: learnable query token cross-attending to the fused feature.
  Tensor query;
  std::vector<TransformerBlock> blocks;
  Tensor head_w1, head_b1, head_w2, head_b2;

  static DecoderHead create(ParamStore& store, const std::string& prefix,
                            std::size_t dim_small, std::size_t dim_large,
                            std::size_t depth, std::size_t heads, Rng& rng);

  Tensor align(const Tensor& f_small, const Tensor& f_large) const;  // -> [dim_large]
  Tensor decode(const Tensor& fused) const;                          // -> scalar
};

}  // namespace csfiqa
