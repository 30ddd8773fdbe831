#include "csfiqa/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace csfiqa {

LossParts batch_loss(const Model& model, const std::vector<const LoadedSample*>& batch,
                     double beta_pair) {
  if (batch.empty()) throw ShapeError("batch_loss: empty batch");
  const double lambda = model.cfg.train.lambda;

  std::vector<ForwardOut> outs;
  outs.reserve(batch.size());
  std::vector<Tensor> preds;
  std::vector<double> labels;
  for (const LoadedSample* s : batch) {
    outs.push_back(model.forward(s->small, s->large));
    preds.push_back(reshape(outs.back().y_hat, {1, 1}));
    labels.push_back(s->mos);
  }

  LossParts parts;
  Tensor pred_vec = reshape(concat_rows(preds), {batch.size()});
  Tensor label_vec = Tensor::vector(labels);
  parts.l1 = l1_loss(pred_vec, label_vec);

  if (lambda == 0.0 || batch.size() < 2) {
    parts.scale = Tensor::scalar(0.0);
    parts.noise = Tensor::scalar(0.0);
    parts.total = parts.l1;
    return parts;
  }

  // Per-layer cls taps for the scale-contrastive loss.
  std::vector<std::array<std::vector<Tensor>, 2>> cls_tokens(model.taps());
  for (std::size_t k = 0; k < model.taps(); ++k)
    for (std::size_t i = 0; i < outs.size(); ++i) {
      cls_tokens[k][0].push_back(model.small_tap(outs[i].small, k));
      cls_tokens[k][1].push_back(model.large_tap(outs[i].large, k));
    }
  ScaleLossResult scl = scale_loss(cls_tokens, labels, beta_pair, model.cfg.scl.tau);
  parts.scale = scl.loss;
  parts.skipped_anchors = scl.skipped_anchors;

  // Noise-sample matching, accumulated over taps and averaged over the batch.
  Tensor noise_total;
  for (std::size_t k = 0; k < model.taps(); ++k)
    for (std::size_t i = 0; i < outs.size(); ++i) {
      Tensor term = noise_loss(model.nsm_regions_small(outs[i], k),
                               model.nsm_regions_large(outs[i], k), model.cfg.scl);
      noise_total = noise_total.defined() ? add(noise_total, term) : term;
    }
  parts.noise = scale(noise_total, 1.0 / static_cast<double>(batch.size()));

  parts.total = add(parts.l1, add(scale(parts.scale, lambda), scale(parts.noise, lambda)));
  return parts;
}

double resolve_beta_pair(const Model& model, const std::vector<LoadedSample>& data,
                         const std::vector<std::size_t>& train_idx) {
  double lo = 1e30, hi = -1e30;
  for (std::size_t i : train_idx) {
    lo = std::min(lo, data[i].mos);
    hi = std::max(hi, data[i].mos);
  }
  return model.cfg.scl.resolve_beta_pair(hi > lo ? hi - lo : 1.0);
}

void train_model(Model& model, const std::vector<LoadedSample>& data,
                 const std::vector<std::size_t>& train_idx) {
  const TrainConfig& tc = model.cfg.train;
  const double beta_pair = resolve_beta_pair(model, data, train_idx);
  Adam opt;
  Rng shuffle_rng(tc.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order = train_idx;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = tc.lr_at_epoch(epoch);
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(start + tc.batch_size, order.size());
      std::vector<const LoadedSample*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&data[order[i]]);
      model.store.zero_grad();
      LossParts parts = batch_loss(model, batch, beta_pair);
      if (!all_finite(parts.total))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
      parts.total.backward();
      opt.step(model.store, lr);
    }
  }
}

std::pair<double, double> evaluate(const Model& model,
                                   const std::vector<LoadedSample>& data,
                                   const std::vector<std::size_t>& idx) {
  std::vector<double> preds, targets;
  for (std::size_t i : idx) {
    preds.push_back(model.forward(data[i].small, data[i].large).y_hat.item());
    targets.push_back(data[i].mos);
  }
  return {srcc(preds, targets), plcc(preds, targets)};
}

MetricsReport run_protocol(const std::vector<LoadedSample>& data, const RunConfig& cfg,
                           Model* out_model) {
  if (data.size() < 10) throw DataError("run_protocol: need at least 10 samples");
  MetricsReport report;
  for (std::size_t r = 0; r < cfg.train.repeats; ++r) {
    RunConfig rcfg = cfg;
    rcfg.train.seed = cfg.train.seed + r;
    Rng split_rng(rcfg.train.seed);
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    split_rng.shuffle(idx);
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(cfg.train.split_fraction *
                                            static_cast<double>(data.size())));
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + n_train);
    std::vector<std::size_t> test_idx(idx.begin() + n_train, idx.end());

    Model model = Model::create(rcfg, rcfg.train.seed);
    try {
      train_model(model, data, train_idx);
    } catch (const NumericError& e) {
      throw NumericError("repeat " + std::to_string(r) + ": " + e.what());
    }
    auto [s, p] = evaluate(model, data, test_idx);
    report.srcc_per_repeat.push_back(s);
    report.plcc_per_repeat.push_back(p);
    if (out_model && r + 1 == cfg.train.repeats) *out_model = std::move(model);
  }
  report.median_srcc = median(report.srcc_per_repeat);
  report.median_plcc = median(report.plcc_per_repeat);
  return report;
}

std::string report_csv(const MetricsReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "repeat,srcc,plcc\n";
  for (std::size_t r = 0; r < report.srcc_per_repeat.size(); ++r)
    os << r << "," << report.srcc_per_repeat[r] << "," << report.plcc_per_repeat[r]
       << "\n";
  os << "median," << report.median_srcc << "," << report.median_plcc << "\n";
  return os.str();
}

}  // namespace csfiqa
