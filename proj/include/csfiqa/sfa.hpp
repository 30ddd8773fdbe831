#pragma once

#include <vector>

#include "csfiqa/blocks.hpp"
#include "csfiqa/config.hpp"

namespace csfiqa {

// Three learnable top-k masks. Each raw scalar is squashed into
// [alpha_k, beta_k] by a sigmoid; mix weights combine the per-mask outputs
// through a softmax.
struct AfsMasks {
  Tensor k_raw;    // [3]
  Tensor mix_raw;  // [3]
  double alpha = 1.0 / 3.0;
  double beta = 3.0 / 4.0;

  static AfsMasks create(ParamStore& store, const std::string& prefix,
                         const SfaConfig& cfg);
  std::vector<double> fractions() const;
  Tensor mix() const { return softmax(mix_raw, -1); }
};

// Deterministic top-k of one score row: k largest values, ties broken by lower
// index. Returned keep flags have one entry per key.
std::vector<std::uint8_t> topk_keep(const std::vector<double>& scores, std::size_t k);

struct CrossAttWeights {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  std::size_t heads = 1;
  static CrossAttWeights create(ParamStore& store, const std::string& prefix,
                                std::size_t dim, std::size_t heads, Rng& rng);
};

// Per-mask attention snapshot for offline inspection (dump-attn).
struct MaskDump {
  double fraction = 0.0;
  std::size_t k_int = 0;
  // One entry per (head, query row): surviving key indices and the dense
  // attention weight row (zeros at dropped keys).
  std::vector<std::vector<std::size_t>> survivors;
  std::vector<std::vector<double>> weights;
};

struct AttnDump {
  std::vector<MaskDump> masks;
  std::vector<double> mix;
  std::size_t n_keys = 0;
  std::size_t heads = 0;
};

// Dense baseline: softmax(Q K^T / sqrt(dim/heads)) V with the output projection.
Tensor cross_att(const Tensor& q_rows, const Tensor& kv_rows, const CrossAttWeights& w);

// Selective variant: per attention row, each mask keeps its k_int largest
// scores (k_int = max(1, round(f * n_keys))), applies masked softmax, and the
// three per-mask results are blended by the softmaxed mix weights.
Tensor select_att(const Tensor& q_rows, const Tensor& kv_rows, const CrossAttWeights& w,
                  const AfsMasks& masks, AttnDump* dump = nullptr);

// Information concentrator: residual learnable linear layer followed by a
// frozen seeded transformer block.
struct Icm {
  Tensor lin_w, lin_b;
  TransformerBlock frozen;

  static Icm create(ParamStore& store, const std::string& prefix, std::size_t dim,
                    std::size_t heads, Rng& rng, Rng& frozen_rng);
  Tensor forward(const Tensor& x) const;
};

// One SFA direction: project the other branch's cls token into this branch's
// width, run (selective) cross attention against this branch's patch tokens,
// then amplify through the ICM. Returns the updated cls vector [dim].
struct SfaDirection {
  Tensor proj_w, proj_b;
  CrossAttWeights attn;
  Icm icm;

  static SfaDirection create(ParamStore& store, const std::string& prefix,
                             std::size_t dim, std::size_t other_dim, std::size_t heads,
                             Rng& rng, Rng& frozen_rng);
  Tensor forward(const Tensor& other_cls, const Tensor& patch_tokens,
                 const AfsMasks& masks, SfaMode mode, AttnDump* dump = nullptr) const;
};

}  // namespace csfiqa
