#pragma once

#include <vector>

#include "csfiqa/blocks.hpp"
#include "csfiqa/config.hpp"

namespace csfiqa {

// Non-overlapping row-major patches, each flattened channel-last.
// pixels: img x img x channels, row-major. Output: n x (patch^2 * channels).
Tensor patchify(const Tensor& pixels, std::size_t img, std::size_t patch,
                std::size_t channels);

// Per-layer token features of one branch; index 0 of each matrix is the cls
// token, the rest are patch tokens.
struct BranchFeatures {
  std::vector<Tensor> layers;
};

// One encoder branch: patch projection + cls token + positional embedding,
// then `depth` pre-norm transformer blocks with a tap after every block.
struct EncoderBranch {
  std::size_t img = 0, patch = 0, dim = 0, channels = 1;
  Tensor embed_w, embed_b, cls, pos;
  std::vector<TransformerBlock> blocks;
  bool use_pos = true;  // disabled only by permutation-equivariance tests

  static EncoderBranch create(ParamStore& store, const std::string& prefix,
                              std::size_t img, std::size_t patch, std::size_t dim,
                              std::size_t depth, std::size_t heads, std::size_t channels,
                              Rng& rng);

  Tensor embed(const Tensor& patches) const;
  BranchFeatures encode(const Tensor& tokens) const;
  BranchFeatures forward(const Tensor& pixels) const;
};

}  // namespace csfiqa
