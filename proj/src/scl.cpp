#include "csfiqa/scl.hpp"

#include <cmath>
#include <limits>

namespace csfiqa {

PairSets classify_pairs(const std::vector<double>& labels, std::size_t anchor,
                        double beta_pair) {
  if (labels.size() < 2) throw ShapeError("classify_pairs: batch must have >= 2 samples");
  if (anchor >= labels.size()) throw ShapeError("classify_pairs: anchor out of range");
  PairSets ps;
  ps.anchor = anchor;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (j == anchor) continue;
    if (std::abs(labels[anchor] - labels[j]) <= beta_pair)
      ps.positives.push_back(j);
    else
      ps.negatives.push_back(j);
  }
  return ps;
}

Tensor info_nce(const Tensor& anchor, const std::vector<Tensor>& positives,
                const std::vector<Tensor>& negatives, double tau) {
  if (positives.empty()) throw ShapeError("info_nce: needs at least one positive");
  if (tau <= 0.0) throw ConfigError("info_nce: tau must be > 0");
  if (negatives.empty()) return Tensor::scalar(0.0);

  const double inv_tau = 1.0 / tau;
  Tensor na = l2_normalize(anchor);
  Tensor neg_sum;
  for (const Tensor& n : negatives) {
    Tensor term = exp_t(scale(dot(na, l2_normalize(n)), inv_tau));
    neg_sum = neg_sum.defined() ? add(neg_sum, term) : term;
  }
  Tensor total;
  for (const Tensor& p : positives) {
    Tensor sp = scale(dot(na, l2_normalize(p)), inv_tau);
    Tensor term = sub(log_t(add(exp_t(sp), neg_sum)), sp);
    total = total.defined() ? add(total, term) : term;
  }
  return scale(total, 1.0 / static_cast<double>(positives.size()));
}

ScaleLossResult scale_loss(
    const std::vector<std::array<std::vector<Tensor>, 2>>& cls_tokens,
    const std::vector<double>& labels, double beta_pair, double tau) {
  ScaleLossResult out;
  const std::size_t batch = labels.size();
  std::vector<PairSets> pairs;
  std::size_t active = 0;
  for (std::size_t i = 0; i < batch; ++i) {
    pairs.push_back(classify_pairs(labels, i, beta_pair));
    if (pairs.back().positives.empty())
      ++out.skipped_anchors;
    else
      ++active;
  }
  if (active == 0) {
    out.loss = Tensor::scalar(0.0);
    return out;
  }

  Tensor total;
  for (const auto& tap : cls_tokens) {
    for (std::size_t a = 0; a < 2; ++a) {
      const std::vector<Tensor>& feats = tap[a];
      if (feats.size() != batch)
        throw ShapeError("scale_loss: feature count does not match batch");
      Tensor per_scale;
      for (std::size_t i = 0; i < batch; ++i) {
        if (pairs[i].positives.empty()) continue;
        std::vector<Tensor> pos, neg;
        for (std::size_t j : pairs[i].positives) pos.push_back(feats[j]);
        for (std::size_t j : pairs[i].negatives) neg.push_back(feats[j]);
        Tensor term = info_nce(feats[i], pos, neg, tau);
        per_scale = per_scale.defined() ? add(per_scale, term) : term;
      }
      Tensor scaled = scale(per_scale, 1.0 / static_cast<double>(active));
      total = total.defined() ? add(total, scaled) : scaled;
    }
  }
  out.loss = total;
  return out;
}

std::vector<Tensor> partition_regions(const Tensor& patch_tokens, std::size_t grid_h,
                                      std::size_t grid_w, std::size_t win_h,
                                      std::size_t win_w) {
  if (patch_tokens.rows() != grid_h * grid_w)
    throw ConfigError("partition_regions: token count does not match grid");
  if (win_h == 0 || win_w == 0 || grid_h % win_h != 0 || grid_w % win_w != 0)
    throw ConfigError("partition_regions: grid not divisible by window");
  std::vector<Tensor> regions;
  for (std::size_t rh = 0; rh < grid_h / win_h; ++rh)
    for (std::size_t rw = 0; rw < grid_w / win_w; ++rw) {
      std::vector<std::size_t> idx;
      for (std::size_t y = 0; y < win_h; ++y)
        for (std::size_t x = 0; x < win_w; ++x)
          idx.push_back((rh * win_h + y) * grid_w + rw * win_w + x);
      regions.push_back(mean_rows(patch_tokens, idx));
    }
  return regions;
}

Tensor noise_loss(const std::vector<Tensor>& small_regions,
                  const std::vector<Tensor>& large_regions, const SclConfig& cfg) {
  if (small_regions.empty() || large_regions.empty())
    throw ShapeError("noise_loss: empty region set");

  auto term_for = [&](const Tensor& s, const Tensor& l) {
    Tensor sim = cosine_sim_eps(s, l);
    if (cfg.noise_form == NoiseForm::kExpInverse) return exp_t(neg(sim));
    return reciprocal(clamp_min(sim, 1e-3));
  };

  if (cfg.noise_mode == NoiseMode::kLeastSimilar) {
    // Selection index from forward values; only the chosen pair enters the graph.
    double best = std::numeric_limits<double>::infinity();
    std::size_t bm = 0, bk = 0;
    for (std::size_t m = 0; m < small_regions.size(); ++m)
      for (std::size_t k = 0; k < large_regions.size(); ++k) {
        const double sim = cosine_sim_eps(small_regions[m], large_regions[k]).item();
        if (sim < best) {
          best = sim;
          bm = m;
          bk = k;
        }
      }
    return term_for(small_regions[bm], large_regions[bk]);
  }

  Tensor total;
  for (const Tensor& s : small_regions)
    for (const Tensor& l : large_regions) {
      Tensor term = term_for(s, l);
      total = total.defined() ? add(total, term) : term;
    }
  return total;
}

}  // namespace csfiqa
