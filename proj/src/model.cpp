#include "csfiqa/model.hpp"

namespace csfiqa {

Model Model::create(const RunConfig& cfg, std::uint64_t weight_seed) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  Rng rng(weight_seed);
  // Separate stream so the frozen amplifier is identical across weight seeds.
  Rng frozen_rng(cfg.sfa.icm_frozen_seed);

  const auto& mc = cfg.model;
  m.enc_small =
      EncoderBranch::create(m.store, "enc.small", mc.img_size_small, mc.patch_small,
                            mc.dim_small, mc.depth_small, mc.heads, mc.channels, rng);
  m.enc_large =
      EncoderBranch::create(m.store, "enc.large", mc.img_size_large, mc.patch_large,
                            mc.dim_large, mc.depth_large, mc.heads, mc.channels, rng);
  m.afs = AfsMasks::create(m.store, "afs", cfg.sfa);
  m.sfa_small = SfaDirection::create(m.store, "sfa.small", mc.dim_small, mc.dim_large,
                                     mc.heads, rng, frozen_rng);
  m.sfa_large = SfaDirection::create(m.store, "sfa.large", mc.dim_large, mc.dim_small,
                                     mc.heads, rng, frozen_rng);
  m.nsm_w = m.store.trunc_normal("nsm.proj.w", {mc.dim_small, mc.dim_large},
                                 xavier_sigma(mc.dim_small, mc.dim_large), rng);
  m.nsm_b = m.store.zeros("nsm.proj.b", {mc.dim_large});
  m.dec = DecoderHead::create(m.store, "dec", mc.dim_small, mc.dim_large,
                              mc.decoder_depth, mc.heads, rng);
  return m;
}

ForwardOut Model::forward(const Tensor& pix_small, const Tensor& pix_large,
                          bool want_attn) const {
  ForwardOut out;
  out.small = enc_small.forward(pix_small);
  out.large = enc_large.forward(pix_large);

  const Tensor& last_s = out.small.layers.back();
  const Tensor& last_l = out.large.layers.back();
  Tensor cls_s = row(last_s, 0);
  Tensor cls_l = row(last_l, 0);
  Tensor patch_s = slice_rows(last_s, 1, last_s.rows());
  Tensor patch_l = slice_rows(last_l, 1, last_l.rows());

  out.f_small = sfa_small.forward(cls_l, patch_s, afs, cfg.sfa.mode,
                                  want_attn ? &out.attn_small : nullptr);
  out.f_large = sfa_large.forward(cls_s, patch_l, afs, cfg.sfa.mode,
                                  want_attn ? &out.attn_large : nullptr);

  Tensor fused = dec.align(out.f_small, out.f_large);
  out.y_hat = dec.decode(fused);
  return out;
}

Tensor Model::small_tap(const BranchFeatures& f, std::size_t k) const {
  const std::size_t l = std::min(k, cfg.model.depth_small - 1);
  return row(f.layers[l], 0);
}

Tensor Model::large_tap(const BranchFeatures& f, std::size_t k) const {
  return row(f.layers[k], 0);
}

std::pair<std::size_t, std::size_t> Model::region_window(std::size_t grid) const {
  // Aim for nsm_regions x nsm_regions regions; fall back to the patch grid
  // itself when it is too coarse to split.
  std::size_t per_side = cfg.scl.nsm_regions;
  while (per_side > 1 && grid % per_side != 0) --per_side;
  return {grid / per_side, grid / per_side};
}

std::vector<Tensor> Model::nsm_regions_small(const ForwardOut& out, std::size_t k) const {
  const std::size_t l = std::min(k, cfg.model.depth_small - 1);
  const Tensor& layer = out.small.layers[l];
  Tensor patches = slice_rows(layer, 1, layer.rows());
  Tensor projected = linear(patches, nsm_w, nsm_b);
  const std::size_t grid = cfg.model.patch_grid_small();
  auto [wh, ww] = region_window(grid);
  return partition_regions(projected, grid, grid, wh, ww);
}

std::vector<Tensor> Model::nsm_regions_large(const ForwardOut& out, std::size_t k) const {
  const Tensor& layer = out.large.layers[k];
  Tensor patches = slice_rows(layer, 1, layer.rows());
  const std::size_t grid = cfg.model.patch_grid_large();
  auto [wh, ww] = region_window(grid);
  return partition_regions(patches, grid, grid, wh, ww);
}

}  // namespace csfiqa
