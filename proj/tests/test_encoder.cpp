#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csfiqa/encoder.hpp"
#include "csfiqa/grad_check.hpp"

using namespace csfiqa;

namespace {

Tensor rand_image(std::size_t img, std::size_t channels, Rng& rng) {
  std::vector<double> px(img * img * channels);
  for (double& v : px) v = rng.uniform(0.0, 1.0);
  return Tensor::from_data({img, img, channels}, std::move(px));
}

EncoderBranch tiny_branch(ParamStore& store, Rng& rng, std::size_t depth = 1) {
  return EncoderBranch::create(store, "enc", 8, 4, 8, depth, 2, 1, rng);
}

}  // namespace

TEST_CASE("patchify: 4x4 image with patch 2 gives 4 patches of 4 values") {
  std::vector<double> px(16);
  for (std::size_t i = 0; i < 16; ++i) px[i] = static_cast<double>(i);
  Tensor p = patchify(Tensor::from_data({4, 4, 1}, px), 4, 2, 1);
  REQUIRE(p.rows() == 4);
  REQUIRE(p.cols() == 4);
  CHECK(p.data() == std::vector<double>{0, 1, 4, 5, 2, 3, 6, 7, 8, 9, 12, 13, 10, 11, 14, 15});
}

TEST_CASE("patchify: constant image gives identical patch vectors") {
  Tensor p = patchify(Tensor::full({8, 8, 1}, 0.25), 8, 4, 1);
  for (std::size_t r = 0; r < p.rows(); ++r)
    for (std::size_t c = 0; c < p.cols(); ++c) CHECK(p.at(r, c) == 0.25);
}

TEST_CASE("patchify: patches partition the image exactly") {
  Rng rng(2);
  std::vector<double> px(6 * 6 * 2);
  for (double& v : px) v = rng.uniform(0.0, 1.0);
  Tensor p = patchify(Tensor::from_data({6, 6, 2}, px), 6, 3, 2);

  std::vector<double> rebuilt(px.size(), -1.0);
  const std::size_t grid = 2, patch = 3, ch = 2;
  for (std::size_t pr = 0; pr < grid; ++pr)
    for (std::size_t pc = 0; pc < grid; ++pc) {
      const std::size_t row = pr * grid + pc;
      std::size_t k = 0;
      for (std::size_t y = 0; y < patch; ++y)
        for (std::size_t x = 0; x < patch; ++x)
          for (std::size_t c = 0; c < ch; ++c)
            rebuilt[((pr * patch + y) * 6 + (pc * patch + x)) * ch + c] = p.at(row, k++);
    }
  CHECK(rebuilt == px);
}

TEST_CASE("patchify: size mismatch is a config error") {
  CHECK_THROWS_AS(patchify(Tensor::zeros({4, 4, 1}), 8, 4, 1), ConfigError);
}

TEST_CASE("embed: shape and cls input-independence") {
  Rng rng(3);
  ParamStore store;
  EncoderBranch enc = tiny_branch(store, rng);

  Tensor a = enc.embed(patchify(rand_image(8, 1, rng), 8, 4, 1));
  Tensor b = enc.embed(patchify(rand_image(8, 1, rng), 8, 4, 1));
  REQUIRE(a.rows() == 5);  // 1 cls + 4 patches
  REQUIRE(a.cols() == 8);

  for (std::size_t c = 0; c < a.cols(); ++c) CHECK(a.at(0, c) == b.at(0, c));
  bool differ = false;
  for (std::size_t i = a.cols(); i < a.numel(); ++i) differ = differ || a.at(i) != b.at(i);
  CHECK(differ);
}

TEST_CASE("embed: zero patches leave bias plus positional terms") {
  Rng rng(4);
  ParamStore store;
  EncoderBranch enc = tiny_branch(store, rng);
  Tensor t = enc.embed(Tensor::zeros({4, 16}));
  for (std::size_t r = 1; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      CHECK(t.at(r, c) ==
            doctest::Approx(enc.embed_b.at(c) + enc.pos.at(r, c)).epsilon(1e-15));
}

TEST_CASE("encode: shapes preserved at every layer") {
  Rng rng(5);
  ParamStore store;
  EncoderBranch enc = tiny_branch(store, rng, 3);
  BranchFeatures f = enc.forward(rand_image(8, 1, rng));
  REQUIRE(f.layers.size() == 3);
  for (const Tensor& layer : f.layers) {
    CHECK(layer.rows() == 5);
    CHECK(layer.cols() == 8);
  }
}

TEST_CASE("encode: zeroed attention and MLP output weights give residual identity") {
  Rng rng(6);
  ParamStore store;
  EncoderBranch enc = tiny_branch(store, rng, 2);
  for (TransformerBlock& blk : enc.blocks) {
    for (double& v : blk.wo.mutable_data()) v = 0.0;
    for (double& v : blk.bo.mutable_data()) v = 0.0;
    for (double& v : blk.w2.mutable_data()) v = 0.0;
    for (double& v : blk.b2.mutable_data()) v = 0.0;
  }
  Tensor tokens = enc.embed(patchify(rand_image(8, 1, rng), 8, 4, 1));
  BranchFeatures f = enc.encode(tokens);
  for (const Tensor& layer : f.layers)
    for (std::size_t i = 0; i < layer.numel(); ++i) CHECK(layer.at(i) == tokens.at(i));
}

TEST_CASE("encode: gradient through the branch matches finite differences") {
  Rng rng(7);
  ParamStore store;
  EncoderBranch enc = tiny_branch(store, rng);
  for (Tensor t : store.trainable())
    for (double& v : t.mutable_data()) v = rng.uniform(-0.3, 0.3);
  Tensor img = rand_image(8, 1, rng);
  const double err = grad_check(
      [&] {
        BranchFeatures f = enc.forward(img);
        return sum(f.layers.back());
      },
      store.trainable());
  CHECK(err <= 1e-4);
}

TEST_CASE("encode: permutation equivariance without positional embeddings") {
  Rng rng(8);
  ParamStore store;
  EncoderBranch enc = tiny_branch(store, rng, 2);
  enc.use_pos = false;

  Tensor patches = patchify(rand_image(8, 1, rng), 8, 4, 1);
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  std::vector<double> pd(patches.numel());
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 16; ++c) pd[r * 16 + c] = patches.at(perm[r], c);
  Tensor permuted = Tensor::from_data({4, 16}, pd);

  Tensor out = enc.encode(enc.embed(patches)).layers.back();
  Tensor out_p = enc.encode(enc.embed(permuted)).layers.back();

  for (std::size_t c = 0; c < 8; ++c)
    CHECK(out.at(0, c) == doctest::Approx(out_p.at(0, c)).epsilon(1e-12));
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 8; ++c)
      CHECK(out.at(1 + perm[r], c) == doctest::Approx(out_p.at(1 + r, c)).epsilon(1e-12));
}

TEST_CASE("branch forward is deterministic under a fixed seed") {
  auto run = [] {
    Rng rng(99);
    ParamStore store;
    EncoderBranch enc = tiny_branch(store, rng, 2);
    return enc.forward(rand_image(8, 1, rng)).layers.back().data();
  };
  CHECK(run() == run());
}

TEST_CASE("reference config honors published depths and validates") {
  ModelConfig cfg = ModelConfig::reference_default();
  CHECK(cfg.depth_small == 1);
  CHECK(cfg.depth_large == 4);
  CHECK(cfg.img_size_small == 384);
  CHECK(cfg.img_size_large == 224);
  CHECK(cfg.heads == 6);
  cfg.validate();

  ModelConfig bad = ModelConfig::toy_default();
  bad.patch_small = 5;  // 48 % 5 != 0
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
