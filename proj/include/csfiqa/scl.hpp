#pragma once

#include <array>
#include <vector>

#include "csfiqa/config.hpp"
#include "csfiqa/ops.hpp"

namespace csfiqa {

// Positive/negative partition of a minibatch around one anchor, by label
// distance: |Y_i - Y_j| <= beta_pair goes to P, otherwise N.
struct PairSets {
  std::size_t anchor = 0;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

PairSets classify_pairs(const std::vector<double>& labels, std::size_t anchor,
                        double beta_pair);

// InfoNCE over L2-normalized features: mean over positives p of
// -log(exp(s_p/tau) / (exp(s_p/tau) + sum_n exp(s_n/tau))).
// Requires at least one positive; with no negatives the loss is exactly 0.
Tensor info_nce(const Tensor& anchor, const std::vector<Tensor>& positives,
                const std::vector<Tensor>& negatives, double tau);

// cls features per tap and scale: cls_tokens[tap][scale][image], scale 0 =
// small, 1 = large. Anchors with empty positive sets are skipped; if all are
// skipped the loss is 0.
struct ScaleLossResult {
  Tensor loss;
  std::size_t skipped_anchors = 0;
};

ScaleLossResult scale_loss(
    const std::vector<std::array<std::vector<Tensor>, 2>>& cls_tokens,
    const std::vector<double>& labels, double beta_pair, double tau);

// Mean-pools patch tokens (grid_h x grid_w, row-major) over non-overlapping
// win_h x win_w windows. Grid dims must be divisible by the window dims.
std::vector<Tensor> partition_regions(const Tensor& patch_tokens, std::size_t grid_h,
                                      std::size_t grid_w, std::size_t win_h,
                                      std::size_t win_w);

// Cross-scale noise-sample-matching loss over two region sets of equal
// feature dimension.
Tensor noise_loss(const std::vector<Tensor>& small_regions,
                  const std::vector<Tensor>& large_regions, const SclConfig& cfg);

}  // namespace csfiqa
