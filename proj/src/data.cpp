#include "csfiqa/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csfiqa/rng.hpp"

namespace fs = std::filesystem;

namespace csfiqa {

void write_pnm(const std::string& path, std::size_t h, std::size_t w, std::size_t c,
               const std::vector<double>& pixels) {
  if (c != 1 && c != 3) throw DataError("write_pnm: channels must be 1 or 3");
  if (pixels.size() != h * w * c) throw DataError("write_pnm: pixel count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_pnm: cannot write " + path);
  out << (c == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> bytes(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double v = std::clamp(pixels[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write_pnm: write failed for " + path);
}

ImageSample read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_pnm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6")
    throw DataError("read_pnm: " + path + " is not a binary PGM/PPM");
  auto next_token = [&]() {
    std::string tok;
    for (;;) {
      if (!(in >> tok)) throw DataError("read_pnm: truncated header in " + path);
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
  };
  ImageSample img;
  img.w = std::stoul(next_token());
  img.h = std::stoul(next_token());
  const unsigned long maxval = std::stoul(next_token());
  if (maxval != 255) throw DataError("read_pnm: unsupported maxval in " + path);
  in.get();  // single whitespace after maxval
  img.c = (magic == "P5") ? 1 : 3;
  std::vector<unsigned char> bytes(img.h * img.w * img.c);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!in) throw DataError("read_pnm: truncated pixel data in " + path);
  img.pixels.resize(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    img.pixels[i] = static_cast<double>(bytes[i]) / 255.0;
  return img;
}

std::vector<double> resize_bilinear(const std::vector<double>& pixels, std::size_t h,
                                    std::size_t w, std::size_t c, std::size_t out_h,
                                    std::size_t out_w) {
  std::vector<double> out(out_h * out_w * c);
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    const double cy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
    const std::size_t y0 = static_cast<std::size_t>(cy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double wy = cy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      const double cx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
      const std::size_t x0 = static_cast<std::size_t>(cx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double wx = cx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double p00 = pixels[(y0 * w + x0) * c + ch];
        const double p01 = pixels[(y0 * w + x1) * c + ch];
        const double p10 = pixels[(y1 * w + x0) * c + ch];
        const double p11 = pixels[(y1 * w + x1) * c + ch];
        out[(y * out_w + x) * c + ch] = (1.0 - wy) * ((1.0 - wx) * p00 + wx * p01) +
                                        wy * ((1.0 - wx) * p10 + wx * p11);
      }
    }
  }
  return out;
}

namespace {

constexpr std::size_t kSynthSize = synth::kSize;

}  // namespace

namespace synth {

std::vector<double> base_image(std::size_t kind, Rng& rng) {
  const std::size_t n = kSynthSize;
  std::vector<double> img(n * n);
  // Bases use canonical orientation and phase (randomness enters through
  // mixing weights only) so that every pattern family shares a fixed sign
  // structure; distortions then change feature magnitudes consistently
  // across the dataset instead of being confounded by random phase flips.
  switch (kind % 3) {
    case 0: {  // diagonal gradient with a random axis balance
      const double gx = rng.uniform(0.3, 1.0), gy = rng.uniform(0.3, 1.0);
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x)
          img[y * n + x] = gx * (static_cast<double>(x) / n - 0.5) +
                           gy * (static_cast<double>(y) / n - 0.5);
      break;
    }
    case 1: {  // checkerboard
      const std::size_t cell = 8;
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x)
          img[y * n + x] = (((x / cell + y / cell) % 2) ? 1.0 : -1.0);
      break;
    }
    default: {  // smooth field: fixed sinusoid basis with random amplitudes
      struct Wave {
        double fx, fy, amp;
      };
      std::vector<Wave> waves = {
          {1.0, 2.0, 0.0}, {2.0, 1.0, 0.0}, {2.0, 3.0, 0.0}, {3.0, 2.0, 0.0}};
      for (Wave& wv : waves) wv.amp = rng.uniform(0.5, 1.5);
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
          double v = 0.0;
          for (const Wave& wv : waves)
            v += wv.amp * std::sin(2.0 * M_PI * (wv.fx * x + wv.fy * y) / n);
          img[y * n + x] = v;
        }
      break;
    }
  }
  // Normalize every base to mean 0.5 and a fixed contrast so that the
  // distortion, not the base pattern, dominates the image statistics.
  double mean = 0.0;
  for (double v : img) mean += v;
  mean /= static_cast<double>(img.size());
  double var = 0.0;
  for (double v : img) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(img.size())) + 1e-12;
  for (double& v : img) v = std::clamp(0.5 + 0.18 * (v - mean) / sd, 0.0, 1.0);
  return img;
}

std::vector<double> gaussian_blur(const std::vector<double>& img, std::size_t n,
                                  double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    ksum += kernel[i + radius];
  }
  for (double& k : kernel) k /= ksum;
  auto pass = [&](const std::vector<double>& src, bool horizontal) {
    std::vector<double> dst(src.size());
    const int ni = static_cast<int>(n);
    for (int y = 0; y < ni; ++y)
      for (int x = 0; x < ni; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          int yy = y, xx = x;
          (horizontal ? xx : yy) += i;
          yy = std::clamp(yy, 0, ni - 1);
          xx = std::clamp(xx, 0, ni - 1);
          acc += kernel[i + radius] * src[yy * n + xx];
        }
        dst[y * n + x] = acc;
      }
    return dst;
  };
  return pass(pass(img, true), false);
}

std::vector<double> distort(const std::vector<double>& base, std::size_t family,
                            double strength, Rng& rng) {
  const std::size_t sz = kSynthSize;
  std::vector<double> img = base;
  switch (family % 4) {
    case 0:  // Gaussian blur, sigma in [0, 4]
      img = gaussian_blur(img, sz, 4.0 * strength);
      break;
    case 1: {  // additive Gaussian noise, sigma in [0, 0.3]
      const double ns = 0.3 * strength;
      for (double& v : img) v = std::clamp(v + ns * rng.normal(), 0.0, 1.0);
      break;
    }
    case 2: {  // block quantization, level in {1..8}
      const std::size_t level = 1 + static_cast<std::size_t>(std::lround(7.0 * strength));
      if (level > 1) {
        std::vector<double> q(img.size());
        for (std::size_t y = 0; y < sz; ++y)
          for (std::size_t x = 0; x < sz; ++x) {
            const std::size_t by = (y / level) * level, bx = (x / level) * level;
            double acc = 0.0;
            std::size_t cnt = 0;
            for (std::size_t yy = by; yy < std::min(by + level, sz); ++yy)
              for (std::size_t xx = bx; xx < std::min(bx + level, sz); ++xx) {
                acc += img[yy * sz + xx];
                ++cnt;
              }
            q[y * sz + x] = acc / static_cast<double>(cnt);
          }
        img = std::move(q);
      }
      break;
    }
    default: {  // over/under exposure gain, 2^(+/-2 strength)
      const double sign = rng.integer(2) ? 1.0 : -1.0;
      const double gain = std::exp2(2.0 * strength * sign);
      for (double& v : img) v = std::clamp(v * gain, 0.0, 1.0);
      break;
    }
  }
  return img;
}

double proxy_mos(const std::vector<double>& img, const std::vector<double>& base) {
  // Severity is the RMS deviation from the pristine base, normalized to
  // [0,1]. It is monotone in each family's strength parameter on a fixed
  // base and puts the four families on one perceptual scale, so the proxy
  // MOS = 1 - severity orders mixed-distortion batches consistently.
  double rms = 0.0;
  for (std::size_t p = 0; p < img.size(); ++p)
    rms += (img[p] - base[p]) * (img[p] - base[p]);
  rms = std::sqrt(rms / static_cast<double>(img.size()));
  return 1.0 - std::min(1.0, rms / 0.2);
}

}  // namespace synth

DatasetManifest synth_generate(std::size_t n, std::uint64_t seed,
                               const std::string& out_dir) {
  if (n == 0) throw DataError("synth_generate: n must be >= 1");
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  if (ec) throw DataError("synth_generate: cannot create " + out_dir);

  Rng rng(seed);
  DatasetManifest manifest;
  manifest.dir = out_dir;
  const std::size_t sz = kSynthSize;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> base = synth::base_image(rng.integer(3), rng);
    const std::size_t family = rng.integer(4);
    const double strength = rng.uniform(0.0, 1.0);
    const std::vector<double> img = synth::distort(base, family, strength, rng);
    std::ostringstream name;
    name << "images/img_" << i << ".pgm";
    write_pnm((fs::path(out_dir) / name.str()).string(), sz, sz, 1, img);
    manifest.rows.push_back({name.str(), synth::proxy_mos(img, base)});
  }
  write_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
  manifest.y_min = 1e30;
  manifest.y_max = -1e30;
  for (const auto& r : manifest.rows) {
    manifest.y_min = std::min(manifest.y_min, r.mos);
    manifest.y_max = std::max(manifest.y_max, r.mos);
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::string& manifest_path) {
  std::ofstream out(manifest_path);
  if (!out) throw DataError("write_manifest: cannot write " + manifest_path);
  out << "path,mos\n";
  out.precision(17);
  for (const auto& r : manifest.rows) out << r.path << "," << r.mos << "\n";
}

DatasetManifest read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("read_manifest: cannot open " + manifest_path);
  DatasetManifest m;
  m.dir = fs::path(manifest_path).parent_path().string();
  if (m.dir.empty()) m.dir = ".";
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) || line != "path,mos")
    throw DataError("read_manifest: missing 'path,mos' header in " + manifest_path);
  ++lineno;
  m.y_min = 1e30;
  m.y_max = -1e30;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0)
      throw DataError("read_manifest: malformed row at line " + std::to_string(lineno));
    ManifestRow row;
    row.path = line.substr(0, comma);
    try {
      row.mos = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw DataError("read_manifest: bad label at line " + std::to_string(lineno));
    }
    if (!std::isfinite(row.mos))
      throw DataError("read_manifest: non-finite label at line " + std::to_string(lineno));
    m.y_min = std::min(m.y_min, row.mos);
    m.y_max = std::max(m.y_max, row.mos);
    m.rows.push_back(std::move(row));
  }
  return m;
}

LoadedSample prepare_sample(const ImageSample& img, const ModelConfig& cfg) {
  if (img.c != cfg.channels)
    throw DataError("prepare_sample: image " + img.id + " has " + std::to_string(img.c) +
                    " channels, config wants " + std::to_string(cfg.channels));
  LoadedSample s;
  s.id = img.id;
  s.mos = img.mos;
  s.small = Tensor::from_data(
      {cfg.img_size_small, cfg.img_size_small, cfg.channels},
      resize_bilinear(img.pixels, img.h, img.w, img.c, cfg.img_size_small,
                      cfg.img_size_small));
  s.large = Tensor::from_data(
      {cfg.img_size_large, cfg.img_size_large, cfg.channels},
      resize_bilinear(img.pixels, img.h, img.w, img.c, cfg.img_size_large,
                      cfg.img_size_large));
  return s;
}

std::vector<LoadedSample> load_dataset(const std::string& manifest_path,
                                       const ModelConfig& cfg) {
  const DatasetManifest m = read_manifest(manifest_path);
  std::vector<LoadedSample> out;
  out.reserve(m.rows.size());
  for (const auto& row : m.rows) {
    const std::string full = (fs::path(m.dir) / row.path).string();
    if (!fs::exists(full)) throw DataError("load_dataset: missing image " + full);
    ImageSample img = read_pnm(full);
    img.id = row.path;
    img.mos = row.mos;
    out.push_back(prepare_sample(img, cfg));
  }
  return out;
}

}  // namespace csfiqa
