#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <vector>

#include "csfiqa/data.hpp"
#include "csfiqa/rng.hpp"

using namespace csfiqa;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("csfiqa_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("synth_generate is bit-identical for the same seed") {
  TempDir a("synth_a"), b("synth_b");
  DatasetManifest ma = synth_generate(8, 42, a.path.string());
  DatasetManifest mb = synth_generate(8, 42, b.path.string());
  REQUIRE(ma.rows.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(ma.rows[i].path == mb.rows[i].path);
    CHECK(ma.rows[i].mos == mb.rows[i].mos);  // exact, not approximate
    CHECK(slurp(a.path / ma.rows[i].path) == slurp(b.path / mb.rows[i].path));
  }
  CHECK(slurp(a.path / "manifest.csv") == slurp(b.path / "manifest.csv"));

  // A different seed produces different data.
  TempDir c("synth_c");
  DatasetManifest mc = synth_generate(8, 43, c.path.string());
  bool any_diff = false;
  for (std::size_t i = 0; i < 8; ++i)
    if (mc.rows[i].mos != ma.rows[i].mos) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("zero-severity distortion anchors the proxy MOS at exactly 1.0") {
  Rng rng(5);
  for (std::size_t kind = 0; kind < 3; ++kind) {
    std::vector<double> base = synth::base_image(kind, rng);
    // Blur with strength 0 is the identity; MOS must hit the anchor exactly.
    std::vector<double> same = synth::distort(base, 0, 0.0, rng);
    CHECK(same == base);
    CHECK(synth::proxy_mos(same, base) == 1.0);
  }
}

TEST_CASE("proxy MOS decreases monotonically with blur strength on a fixed base") {
  Rng rng(9);
  std::vector<double> base = synth::base_image(1, rng);  // checkerboard: most texture
  double prev = 2.0;
  for (double s : {0.0, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0}) {
    Rng drng(0);  // blur consumes no randomness; fixed stream for uniformity
    const double mos = synth::proxy_mos(synth::distort(base, 0, s, drng), base);
    CHECK(mos <= prev);
    if (prev > 0.0 && prev <= 1.0) CHECK(mos < prev);  // strict until the clamp
    prev = mos;
  }
}

TEST_CASE("proxy MOS falls with noise strength on a fixed base") {
  Rng rng(11);
  std::vector<double> base = synth::base_image(2, rng);
  Rng n1(7), n2(7);
  const double mild = synth::proxy_mos(synth::distort(base, 1, 0.2, n1), base);
  const double harsh = synth::proxy_mos(synth::distort(base, 1, 0.9, n2), base);
  CHECK(mild > harsh);
  CHECK(mild < 1.0);
}

TEST_CASE("base images are normalized to mean 0.5") {
  Rng rng(13);
  for (std::size_t kind = 0; kind < 3; ++kind) {
    std::vector<double> img = synth::base_image(kind, rng);
    REQUIRE(img.size() == synth::kSize * synth::kSize);
    double mean = 0.0, lo = 1e30, hi = -1e30;
    for (double v : img) {
      mean += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    mean /= static_cast<double>(img.size());
    CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
  }
}

TEST_CASE("pnm round trip preserves 8-bit quantized pixels") {
  TempDir dir("pnm");
  const std::string path = (dir.path / "img.pgm").string();
  std::vector<double> px = {0.0, 0.25, 0.5, 1.0, 0.1, 0.9};
  write_pnm(path, 2, 3, 1, px);
  ImageSample img = read_pnm(path);
  CHECK(img.h == 2);
  CHECK(img.w == 3);
  CHECK(img.c == 1);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double quantized = std::lround(px[i] * 255.0) / 255.0;
    CHECK(img.pixels[i] == doctest::Approx(quantized).epsilon(1e-12));
  }

  CHECK_THROWS_AS(write_pnm(path, 2, 3, 2, px), DataError);      // bad channels
  CHECK_THROWS_AS(write_pnm(path, 2, 2, 1, px), DataError);      // count mismatch
  CHECK_THROWS_AS(read_pnm((dir.path / "nope.pgm").string()), DataError);
}

TEST_CASE("manifest round trip and labels preserved bit-exactly") {
  TempDir dir("manifest");
  DatasetManifest m;
  m.dir = dir.path.string();
  m.rows = {{"images/a.pgm", 0.123456789012345678}, {"images/b.pgm", 1.0}};
  const std::string path = (dir.path / "manifest.csv").string();
  write_manifest(m, path);
  DatasetManifest r = read_manifest(path);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].path == "images/a.pgm");
  CHECK(r.rows[0].mos == m.rows[0].mos);  // round-trips through max precision
  CHECK(r.rows[1].mos == 1.0);
  CHECK(r.y_min == m.rows[0].mos);
  CHECK(r.y_max == 1.0);
}

TEST_CASE("manifest parse errors name the offending line") {
  TempDir dir("badmanifest");
  const std::string path = (dir.path / "m.csv").string();

  spit(path, "wrong,header\n");
  CHECK_THROWS_WITH_AS(read_manifest(path), doctest::Contains("path,mos"), DataError);

  spit(path, "path,mos\nimages/a.pgm,0.5\nimages/b.pgm,notanumber\n");
  CHECK_THROWS_WITH_AS(read_manifest(path), doctest::Contains("line 3"), DataError);

  spit(path, "path,mos\nnocomma\n");
  CHECK_THROWS_WITH_AS(read_manifest(path), doctest::Contains("line 2"), DataError);

  spit(path, "path,mos\nimages/a.pgm,inf\n");
  CHECK_THROWS_AS(read_manifest(path), DataError);
}

TEST_CASE("load_dataset round trip matches synth_generate output") {
  TempDir dir("roundtrip");
  DatasetManifest m = synth_generate(5, 3, dir.path.string());
  ModelConfig cfg;  // toy default
  std::vector<LoadedSample> data =
      load_dataset((dir.path / "manifest.csv").string(), cfg);
  REQUIRE(data.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(data[i].id == m.rows[i].path);
    CHECK(data[i].mos == m.rows[i].mos);  // labels pass through unchanged
    CHECK(data[i].small.shape() ==
          std::vector<std::size_t>{cfg.img_size_small, cfg.img_size_small, 1});
    CHECK(data[i].large.shape() ==
          std::vector<std::size_t>{cfg.img_size_large, cfg.img_size_large, 1});
  }
}

TEST_CASE("load_dataset with a missing image names the path") {
  TempDir dir("missing");
  spit((dir.path / "manifest.csv").string(), "path,mos\nimages/ghost.pgm,0.5\n");
  ModelConfig cfg;
  CHECK_THROWS_WITH_AS(load_dataset((dir.path / "manifest.csv").string(), cfg),
                       doctest::Contains("ghost.pgm"), DataError);
}

TEST_CASE("resize_bilinear preserves constants and is exact at identity") {
  std::vector<double> flat(16, 0.7);
  std::vector<double> out = resize_bilinear(flat, 4, 4, 1, 7, 5);
  REQUIRE(out.size() == 35);
  for (double v : out) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));

  std::vector<double> ramp = {0, 1, 2, 3};
  CHECK(resize_bilinear(ramp, 2, 2, 1, 2, 2) == ramp);
}

TEST_CASE("prepare_sample rejects channel mismatches") {
  ImageSample img;
  img.id = "x";
  img.h = img.w = 4;
  img.c = 3;
  img.pixels.assign(48, 0.5);
  ModelConfig cfg;  // wants 1 channel
  CHECK_THROWS_AS(prepare_sample(img, cfg), DataError);
}

TEST_CASE("config parse -> serialize -> parse is the identity") {
  RunConfig cfg;
  cfg.model.dim_small = 12;
  cfg.train.epochs = 5;
  cfg.train.lambda = 0.25;
  cfg.scl.tau = 0.07;
  cfg.sfa.mode = SfaMode::kCrossAtt;
  const std::string text = serialize_config(cfg);
  RunConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.model.dim_small == 12);
  CHECK(back.train.epochs == 5);
  CHECK(back.train.lambda == 0.25);
  CHECK(back.scl.tau == 0.07);
  CHECK(back.sfa.mode == SfaMode::kCrossAtt);
}

TEST_CASE("unknown config keys are rejected") {
  CHECK_THROWS_WITH_AS(parse_config("epochz=9\n"), doctest::Contains("epochz"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config("epochs=notanint\n"), ConfigError);
  // Valid keys parse fine, comments and blank lines are ignored.
  RunConfig ok = parse_config("# comment\n\nepochs=4\nlr=0.001\n");
  CHECK(ok.train.epochs == 4);
  CHECK(ok.train.lr == 0.001);
}
