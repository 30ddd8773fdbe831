#include "csfiqa/sfa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace csfiqa {

AfsMasks AfsMasks::create(ParamStore& store, const std::string& prefix,
                          const SfaConfig& cfg) {
  AfsMasks m;
  m.alpha = cfg.alpha_k;
  m.beta = cfg.beta_k;
  // Raw values chosen so the squashed fractions start evenly spread over the
  // range: sigmoid = 1/4, 1/2, 3/4.
  const double q = std::log(3.0);
  m.k_raw = store.add(prefix + ".k_raw", {3}, {-q, 0.0, q});
  m.mix_raw = store.zeros(prefix + ".mix_raw", {3});
  return m;
}

std::vector<double> AfsMasks::fractions() const {
  std::vector<double> f(3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-k_raw.at(i)));
    f[i] = alpha + (beta - alpha) * s;
  }
  return f;
}

std::vector<std::uint8_t> topk_keep(const std::vector<double>& scores, std::size_t k) {
  const std::size_t n = scores.size();
  k = std::min(std::max<std::size_t>(k, 1), n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::uint8_t> keep(n, 0);
  for (std::size_t i = 0; i < k; ++i) keep[idx[i]] = 1;
  return keep;
}

CrossAttWeights CrossAttWeights::create(ParamStore& store, const std::string& prefix,
                                        std::size_t dim, std::size_t heads, Rng& rng) {
  const double sigma = xavier_sigma(dim, dim);
  CrossAttWeights w;
  w.heads = heads;
  w.wq = store.trunc_normal(prefix + ".wq", {dim, dim}, sigma, rng);
  w.bq = store.zeros(prefix + ".bq", {dim});
  w.wk = store.trunc_normal(prefix + ".wk", {dim, dim}, sigma, rng);
  w.bk = store.zeros(prefix + ".bk", {dim});
  w.wv = store.trunc_normal(prefix + ".wv", {dim, dim}, sigma, rng);
  w.bv = store.zeros(prefix + ".bv", {dim});
  w.wo = store.trunc_normal(prefix + ".wo", {dim, dim}, sigma, rng);
  w.bo = store.zeros(prefix + ".bo", {dim});
  return w;
}

Tensor cross_att(const Tensor& q_rows, const Tensor& kv_rows, const CrossAttWeights& w) {
  return multihead_attention(q_rows, kv_rows, w.wq, w.bq, w.wk, w.bk, w.wv, w.bv, w.wo,
                             w.bo, w.heads);
}

Tensor select_att(const Tensor& q_rows, const Tensor& kv_rows, const CrossAttWeights& w,
                  const AfsMasks& masks, AttnDump* dump) {
  const std::size_t dim = kv_rows.cols();
  if (dim % w.heads != 0) throw ConfigError("select_att: dim not divisible by heads");
  const std::size_t dh = dim / w.heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t n_keys = kv_rows.rows();
  const std::size_t n_q = q_rows.rows();

  Tensor q = linear(q_rows, w.wq, w.bq);
  Tensor k = linear(kv_rows, w.wk, w.bk);
  Tensor v = linear(kv_rows, w.wv, w.bv);

  const std::vector<double> fractions = masks.fractions();
  Tensor mix = masks.mix();
  if (dump) {
    dump->masks.assign(3, MaskDump{});
    dump->mix.assign(mix.data().begin(), mix.data().end());
    dump->n_keys = n_keys;
    dump->heads = w.heads;
  }

  // Shared per-head score matrices; selection indices are taken from forward
  // values, so the hard mask is a constant for the backward pass.
  std::vector<Tensor> scores(w.heads), vh(w.heads);
  for (std::size_t h = 0; h < w.heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
    Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
    vh[h] = slice_cols(v, h * dh, (h + 1) * dh);
    scores[h] = scale(matmul(qh, transpose(kh)), inv_scale);
  }

  Tensor blended;
  for (std::size_t m = 0; m < 3; ++m) {
    const std::size_t k_int = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fractions[m] * static_cast<double>(n_keys))));
    if (dump) {
      (*dump).masks[m].fraction = fractions[m];
      (*dump).masks[m].k_int = std::min(k_int, n_keys);
    }
    std::vector<Tensor> head_out;
    for (std::size_t h = 0; h < w.heads; ++h) {
      std::vector<std::uint8_t> keep(n_q * n_keys, 0);
      for (std::size_t r = 0; r < n_q; ++r) {
        std::vector<double> row(scores[h].data().begin() + r * n_keys,
                                scores[h].data().begin() + (r + 1) * n_keys);
        auto row_keep = topk_keep(row, k_int);
        std::copy(row_keep.begin(), row_keep.end(), keep.begin() + r * n_keys);
      }
      Tensor attn = masked_softmax(scores[h], keep, -1);
      if (dump)
        for (std::size_t r = 0; r < n_q; ++r) {
          std::vector<std::size_t> surv;
          std::vector<double> wrow(attn.data().begin() + r * n_keys,
                                   attn.data().begin() + (r + 1) * n_keys);
          for (std::size_t j = 0; j < n_keys; ++j)
            if (keep[r * n_keys + j]) surv.push_back(j);
          (*dump).masks[m].survivors.push_back(std::move(surv));
          (*dump).masks[m].weights.push_back(std::move(wrow));
        }
      head_out.push_back(matmul(attn, vh[h]));
    }
    Tensor masked = scale_by(concat_cols(head_out), element(mix, m));
    blended = blended.defined() ? add(blended, masked) : masked;
  }
  return linear(blended, w.wo, w.bo);
}

Icm Icm::create(ParamStore& store, const std::string& prefix, std::size_t dim,
                std::size_t heads, Rng& rng, Rng& frozen_rng) {
  Icm icm;
  icm.lin_w = store.trunc_normal(prefix + ".lin.w", {dim, dim}, xavier_sigma(dim, dim), rng);
  icm.lin_b = store.zeros(prefix + ".lin.b", {dim});
  icm.frozen = TransformerBlock::create(store, prefix + ".frozen", dim, heads,
                                        frozen_rng, /*frozen=*/true, /*sigma=*/-1.0);
  return icm;
}

Tensor Icm::forward(const Tensor& x) const {
  return frozen.forward(add(x, linear(x, lin_w, lin_b)));
}

SfaDirection SfaDirection::create(ParamStore& store, const std::string& prefix,
                                  std::size_t dim, std::size_t other_dim,
                                  std::size_t heads, Rng& rng, Rng& frozen_rng) {
  SfaDirection d;
  d.proj_w = store.trunc_normal(prefix + ".proj.w", {other_dim, dim},
                                xavier_sigma(other_dim, dim), rng);
  d.proj_b = store.zeros(prefix + ".proj.b", {dim});
  d.attn = CrossAttWeights::create(store, prefix + ".attn", dim, heads, rng);
  d.icm = Icm::create(store, prefix + ".icm", dim, heads, rng, frozen_rng);
  return d;
}

Tensor SfaDirection::forward(const Tensor& other_cls, const Tensor& patch_tokens,
                             const AfsMasks& masks, SfaMode mode, AttnDump* dump) const {
  Tensor q_row = linear(reshape(other_cls, {1, other_cls.numel()}), proj_w, proj_b);
  Tensor x = concat_rows({q_row, patch_tokens});
  Tensor updated = (mode == SfaMode::kSelectAtt) ? select_att(q_row, x, attn, masks, dump)
                                                 : cross_att(q_row, x, attn);
  return row(icm.forward(updated), 0);
}

}  // namespace csfiqa
