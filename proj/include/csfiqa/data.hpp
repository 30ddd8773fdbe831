#pragma once

#include <string>
#include <vector>

#include "csfiqa/config.hpp"
#include "csfiqa/tensor.hpp"

namespace csfiqa {

struct ImageSample {
  std::string id;
  std::size_t h = 0, w = 0, c = 1;
  std::vector<double> pixels;  // [0,1], row-major, channel-last
  double mos = 0.0;
};

struct ManifestRow {
  std::string path;  // relative to the manifest's directory
  double mos = 0.0;
};

struct DatasetManifest {
  std::string dir;
  std::vector<ManifestRow> rows;
  double y_min = 0.0, y_max = 1.0;
};

// Binary PGM/PPM (P5/P6, maxval 255).
void write_pnm(const std::string& path, std::size_t h, std::size_t w, std::size_t c,
               const std::vector<double>& pixels);
ImageSample read_pnm(const std::string& path);

std::vector<double> resize_bilinear(const std::vector<double>& pixels, std::size_t h,
                                    std::size_t w, std::size_t c, std::size_t out_h,
                                    std::size_t out_w);

// Procedural base images with one random distortion each; the proxy MOS is
// 1 - severity, so a pristine image scores 1.0. Deterministic in `seed`.
DatasetManifest synth_generate(std::size_t n, std::uint64_t seed,
                               const std::string& out_dir);

// Building blocks of synth_generate, exposed so the severity map's anchor and
// monotonicity properties can be exercised directly.
class Rng;

namespace synth {
constexpr std::size_t kSize = 64;
// kind % 3 selects gradient / checkerboard / smooth field; mean 0.5, fixed
// contrast.
std::vector<double> base_image(std::size_t kind, Rng& rng);
// family: 0 blur, 1 noise, 2 block quantization, 3 exposure; strength in [0,1].
std::vector<double> distort(const std::vector<double>& base, std::size_t family,
                            double strength, Rng& rng);
// 1 - min(1, rms(img - base) / 0.2).
double proxy_mos(const std::vector<double>& img, const std::vector<double>& base);
}  // namespace synth

DatasetManifest read_manifest(const std::string& manifest_path);
void write_manifest(const DatasetManifest& manifest, const std::string& manifest_path);

// Sample with per-branch resized pixel tensors, ready for Model::forward.
struct LoadedSample {
  std::string id;
  double mos = 0.0;
  Tensor small, large;
};

std::vector<LoadedSample> load_dataset(const std::string& manifest_path,
                                       const ModelConfig& cfg);
LoadedSample prepare_sample(const ImageSample& img, const ModelConfig& cfg);

}  // namespace csfiqa
