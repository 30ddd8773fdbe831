#pragma once

#include <cstdint>
#include <string>

namespace csfiqa {

// Two-branch encoder geometry. "small" is the fine-patch high-resolution
// branch, "large" the coarse one.
struct ModelConfig {
  std::size_t img_size_small = 48;
  std::size_t img_size_large = 28;
  std::size_t patch_small = 6;
  std::size_t patch_large = 7;
  std::size_t dim_small = 24;
  std::size_t dim_large = 48;
  std::size_t depth_small = 1;
  std::size_t depth_large = 4;
  std::size_t heads = 6;
  std::size_t decoder_depth = 1;
  std::size_t channels = 1;

  // Full-size instance matching the published setup.
  static ModelConfig reference_default();
  // Desk-scale default (the struct initializers above).
  static ModelConfig toy_default();

  std::size_t patches_small() const;
  std::size_t patches_large() const;
  std::size_t patch_grid_small() const { return img_size_small / patch_small; }
  std::size_t patch_grid_large() const { return img_size_large / patch_large; }
  void validate() const;
};

struct TrainConfig {
  std::size_t epochs = 9;
  double lr = 2e-4;
  double lr_decay_factor = 10.0;
  std::size_t lr_decay_every = 3;
  std::size_t batch_size = 3;
  double lambda = 0.01;
  std::size_t repeats = 10;
  double split_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
  double lr_at_epoch(std::size_t epoch) const;
};

enum class NoiseMode { kAllPairs, kLeastSimilar };
enum class NoiseForm { kExpInverse, kReciprocal };

struct SclConfig {
  double tau = 0.1;
  double beta_pair = -1.0;  // < 0: auto, 0.2 x label range of the training set
  NoiseMode noise_mode = NoiseMode::kAllPairs;
  NoiseForm noise_form = NoiseForm::kExpInverse;
  std::size_t nsm_regions = 2;  // regions per side of the pooled grid

  void validate() const;
  double resolve_beta_pair(double label_range) const;
};

enum class SfaMode { kSelectAtt, kCrossAtt };

struct SfaConfig {
  double alpha_k = 1.0 / 3.0;
  double beta_k = 0.75;
  std::uint64_t icm_frozen_seed = 1234;
  SfaMode mode = SfaMode::kSelectAtt;

  void validate() const;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SclConfig scl;
  SfaConfig sfa;

  void validate() const;
};

// Flat key=value text format. Unknown keys are ConfigErrors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

}  // namespace csfiqa
