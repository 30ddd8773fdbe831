#pragma once

#include <memory>

#include "csfiqa/decoder.hpp"
#include "csfiqa/encoder.hpp"
#include "csfiqa/scl.hpp"
#include "csfiqa/sfa.hpp"

namespace csfiqa {

struct ForwardOut {
  BranchFeatures small;
  BranchFeatures large;
  Tensor f_small, f_large;  // SFA outputs, [dim_small] / [dim_large]
  Tensor y_hat;             // scalar prediction
  AttnDump attn_small, attn_large;
};

// Full CSFIQA model: two encoder branches, bidirectional SFA with shared AFS
// masks, NSM projection, and the decoder head.
class Model {
 public:
  static Model create(const RunConfig& cfg, std::uint64_t weight_seed);

  ForwardOut forward(const Tensor& pix_small, const Tensor& pix_large,
                     bool want_attn = false) const;

  // Layer taps: the large branch contributes layer k, the shallower
  // small branch its deepest available layer.
  std::size_t taps() const { return cfg.model.depth_large; }
  Tensor small_tap(const BranchFeatures& f, std::size_t k) const;
  Tensor large_tap(const BranchFeatures& f, std::size_t k) const;

  // NSM region grids at tap k for one image (small tokens are projected into
  // the large width so cross-scale cosine similarity is defined).
  std::vector<Tensor> nsm_regions_small(const ForwardOut& out, std::size_t k) const;
  std::vector<Tensor> nsm_regions_large(const ForwardOut& out, std::size_t k) const;

  RunConfig cfg;
  ParamStore store;
  EncoderBranch enc_small, enc_large;
  SfaDirection sfa_small, sfa_large;
  AfsMasks afs;
  Tensor nsm_w, nsm_b;
  DecoderHead dec;

 private:
  Model() = default;
  std::pair<std::size_t, std::size_t> region_window(std::size_t grid) const;
};

}  // namespace csfiqa
