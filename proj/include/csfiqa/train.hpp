#pragma once

#include <string>
#include <vector>

#include "csfiqa/adam.hpp"
#include "csfiqa/data.hpp"
#include "csfiqa/metrics.hpp"
#include "csfiqa/model.hpp"

namespace csfiqa {

struct LossParts {
  Tensor total, l1, scale, noise;
  std::size_t skipped_anchors = 0;
};

// Total loss over one minibatch: mean l1 + lambda * (L_scale + L_noise).
// With lambda = 0 the contrastive branches are skipped entirely.
LossParts batch_loss(const Model& model, const std::vector<const LoadedSample*>& batch,
                     double beta_pair);

struct MetricsReport {
  std::vector<double> srcc_per_repeat, plcc_per_repeat;
  double median_srcc = 0.0, median_plcc = 0.0;
};

// Trains in place over data[train_idx] with the model's TrainConfig schedule.
void train_model(Model& model, const std::vector<LoadedSample>& data,
                 const std::vector<std::size_t>& train_idx);

std::pair<double, double> evaluate(const Model& model,
                                   const std::vector<LoadedSample>& data,
                                   const std::vector<std::size_t>& idx);

// 80/20-split x repeats protocol: per repeat r the shuffle, split, and model
// init are all reseeded with seed + r; reports the medians. If `out_model` is
// non-null it receives the last repeat's trained model.
MetricsReport run_protocol(const std::vector<LoadedSample>& data, const RunConfig& cfg,
                           Model* out_model = nullptr);

std::string report_csv(const MetricsReport& report);

double resolve_beta_pair(const Model& model, const std::vector<LoadedSample>& data,
                         const std::vector<std::size_t>& train_idx);

}  // namespace csfiqa
