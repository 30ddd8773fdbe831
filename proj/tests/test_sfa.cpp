#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "csfiqa/grad_check.hpp"
#include "csfiqa/rng.hpp"
#include "csfiqa/sfa.hpp"

using namespace csfiqa;

namespace {

Tensor rand_mat(std::size_t r, std::size_t c, Rng& rng, bool rg = false) {
  std::vector<double> data(r * c);
  for (double& v : data) v = rng.uniform(-1.0, 1.0);
  return Tensor::from_data({r, c}, std::move(data), rg);
}

// Builds attention weights over `dim` with `heads` heads from one RNG stream.
CrossAttWeights make_weights(ParamStore& store, std::size_t dim, std::size_t heads,
                             Rng& rng, const std::string& prefix = "w") {
  return CrossAttWeights::create(store, prefix, dim, heads, rng);
}

// AFS masks whose squashed fractions are pinned to [alpha, beta] limits.
AfsMasks make_masks(ParamStore& store, double alpha, double beta,
                    const std::string& prefix = "afs") {
  SfaConfig cfg;
  cfg.alpha_k = alpha;
  cfg.beta_k = beta;
  return AfsMasks::create(store, prefix, cfg);
}

}  // namespace

TEST_CASE("topk_keep selects k largest with lower-index tie break") {
  std::vector<std::uint8_t> keep = topk_keep({0.5, 2.0, 1.0, 2.0}, 2);
  CHECK(keep == std::vector<std::uint8_t>{0, 1, 0, 1});

  // Tie at the cut: the lower index wins.
  keep = topk_keep({1.0, 1.0, 1.0}, 2);
  CHECK(keep == std::vector<std::uint8_t>{1, 1, 0});

  // k >= n keeps everything; k = 0 is clamped to 1.
  CHECK(topk_keep({3.0, 1.0}, 5) == std::vector<std::uint8_t>{1, 1});
  CHECK(topk_keep({3.0, 1.0}, 0) == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("AFS fractions stay in [alpha, beta] and mix weights sum to 1") {
  ParamStore store;
  AfsMasks m = make_masks(store, 1.0 / 3.0, 0.75);
  std::vector<double> f = m.fractions();
  REQUIRE(f.size() == 3);
  for (double v : f) {
    CHECK(v >= 1.0 / 3.0);
    CHECK(v <= 0.75);
  }
  // Initial raw values -ln3, 0, ln3 put the sigmoids at 1/4, 1/2, 3/4.
  const double span = 0.75 - 1.0 / 3.0;
  CHECK(f[0] == doctest::Approx(1.0 / 3.0 + span * 0.25).epsilon(1e-12));
  CHECK(f[1] == doctest::Approx(1.0 / 3.0 + span * 0.50).epsilon(1e-12));
  CHECK(f[2] == doctest::Approx(1.0 / 3.0 + span * 0.75).epsilon(1e-12));

  Tensor mix = m.mix();
  double s = 0.0;
  for (std::size_t i = 0; i < 3; ++i) s += mix.at(i);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

  // Extreme raw values still respect the closed interval.
  for (double& v : m.k_raw.mutable_data()) v = 50.0;
  for (double v : m.fractions()) CHECK(v <= 0.75 + 1e-12);
  for (double& v : m.k_raw.mutable_data()) v = -50.0;
  for (double v : m.fractions()) CHECK(v >= 1.0 / 3.0 - 1e-12);
}

TEST_CASE("cross_att with one key reduces to the projected value row") {
  Rng rng(3);
  ParamStore store;
  const std::size_t dim = 6;
  CrossAttWeights w = make_weights(store, dim, 1, rng);
  Tensor q = rand_mat(1, dim, rng);
  Tensor kv = rand_mat(1, dim, rng);
  Tensor out = cross_att(q, kv, w);

  // Attention over a single key is the weight-1 convex combination, so the
  // output is v = kv wv + bv pushed through the output projection.
  Tensor v = add_rowvec(matmul(kv, w.wv), w.bv);
  Tensor want = add_rowvec(matmul(v, w.wo), w.bo);
  REQUIRE(out.numel() == want.numel());
  for (std::size_t i = 0; i < out.numel(); ++i)
    CHECK(out.at(i) == doctest::Approx(want.at(i)).epsilon(1e-12));
}

TEST_CASE("cross_att with identical keys averages the value rows") {
  Rng rng(5);
  ParamStore store;
  const std::size_t dim = 4;
  CrossAttWeights w = make_weights(store, dim, 2, rng);
  Tensor q = rand_mat(1, dim, rng);
  Tensor one = rand_mat(1, dim, rng);
  Tensor kv = concat_rows({one, one, one});
  Tensor out = cross_att(q, kv, w);
  Tensor single = cross_att(q, one, w);
  for (std::size_t i = 0; i < out.numel(); ++i)
    CHECK(out.at(i) == doctest::Approx(single.at(i)).epsilon(1e-12));
}

TEST_CASE("cross_att gradient matches central finite differences") {
  Rng rng(7);
  ParamStore store;
  const std::size_t dim = 4;
  CrossAttWeights w = make_weights(store, dim, 2, rng);
  Tensor q = rand_mat(1, dim, rng, true);
  Tensor kv = rand_mat(3, dim, rng, true);
  std::vector<Tensor> params = {q,    kv,   w.wq, w.bq, w.wk,
                                w.bk, w.wv, w.bv, w.wo, w.bo};
  const double err = grad_check([&] { return sum(cross_att(q, kv, w)); }, params);
  CHECK(err <= 1e-6);
}

TEST_CASE("select_att with keep-all masks equals dense cross_att") {
  Rng rng(9);
  ParamStore store;
  const std::size_t dim = 8;
  CrossAttWeights w = make_weights(store, dim, 2, rng);
  AfsMasks masks = make_masks(store, 1.0, 1.0);  // every fraction is exactly 1
  for (int rep = 0; rep < 5; ++rep) {
    Tensor q = rand_mat(1, dim, rng);
    Tensor kv = rand_mat(5, dim, rng);
    Tensor sel = select_att(q, kv, w, masks);
    Tensor dense = cross_att(q, kv, w);
    for (std::size_t i = 0; i < sel.numel(); ++i)
      CHECK(sel.at(i) == doctest::Approx(dense.at(i)).epsilon(1e-10));
  }
}

TEST_CASE("select_att row weights sum to 1 and dropped keys are exactly 0") {
  Rng rng(11);
  ParamStore store;
  const std::size_t dim = 6;
  CrossAttWeights w = make_weights(store, dim, 2, rng);
  AfsMasks masks = make_masks(store, 1.0 / 3.0, 0.75);
  Tensor q = rand_mat(2, dim, rng);
  Tensor kv = rand_mat(7, dim, rng);
  AttnDump dump;
  select_att(q, kv, w, masks, &dump);
  REQUIRE(dump.masks.size() == 3);
  for (const MaskDump& m : dump.masks) {
    for (std::size_t r = 0; r < m.weights.size(); ++r) {
      double s = 0.0;
      std::vector<std::uint8_t> kept(dump.n_keys, 0);
      for (std::size_t j : m.survivors[r]) kept[j] = 1;
      for (std::size_t j = 0; j < dump.n_keys; ++j) {
        s += m.weights[r][j];
        if (!kept[j]) CHECK(m.weights[r][j] == 0.0);  // exact zero, not approx
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(m.survivors[r].size() == m.k_int);
    }
  }
}

TEST_CASE("select_att survivor sets are nested for increasing fractions") {
  Rng rng(13);
  ParamStore store;
  const std::size_t dim = 6;
  CrossAttWeights w = make_weights(store, dim, 3, rng);
  AfsMasks masks = make_masks(store, 0.2, 0.9);
  Tensor q = rand_mat(1, dim, rng);
  Tensor kv = rand_mat(9, dim, rng);
  AttnDump dump;
  select_att(q, kv, w, masks, &dump);
  // Masks are ordered by fraction at init (1/4, 1/2, 3/4 of the span).
  for (std::size_t m = 0; m + 1 < 3; ++m) {
    REQUIRE(dump.masks[m].survivors.size() == dump.masks[m + 1].survivors.size());
    for (std::size_t r = 0; r < dump.masks[m].survivors.size(); ++r) {
      for (std::size_t j : dump.masks[m].survivors[r]) {
        const auto& sup = dump.masks[m + 1].survivors[r];
        CHECK(std::find(sup.begin(), sup.end(), j) != sup.end());
      }
    }
  }
}

TEST_CASE("select_att with minimal fractions keeps exactly the argmax key") {
  Rng rng(15);
  ParamStore store;
  const std::size_t dim = 4;
  CrossAttWeights w = make_weights(store, dim, 1, rng);
  AfsMasks masks = make_masks(store, 1e-6, 1e-6);  // k_int = max(1, ~0) = 1
  Tensor q = rand_mat(1, dim, rng);
  Tensor kv = rand_mat(6, dim, rng);
  AttnDump dump;
  select_att(q, kv, w, masks, &dump);
  for (const MaskDump& m : dump.masks) {
    CHECK(m.k_int == 1);
    for (const auto& surv : m.survivors) CHECK(surv.size() == 1);
    for (const auto& row : m.weights) {
      // The lone survivor carries all the mass.
      CHECK(*std::max_element(row.begin(), row.end()) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("select_att output is invariant to perturbing a dropped key's value") {
  Rng rng(17);
  ParamStore store;
  const std::size_t dim = 4;
  CrossAttWeights w = make_weights(store, dim, 1, rng);
  AfsMasks masks = make_masks(store, 1e-6, 1e-6);  // single survivor per row
  Tensor q = rand_mat(1, dim, rng);
  Tensor kv = rand_mat(5, dim, rng);
  AttnDump dump;
  Tensor base = select_att(q, kv, w, masks, &dump);
  const std::size_t winner = dump.masks[0].survivors[0][0];

  // Shrink some non-surviving row: its key score decreases, so the survivor
  // set is unchanged, and the output must match bit-for-bit.
  const std::size_t loser = winner == 0 ? 1 : 0;
  std::vector<double> data = kv.data();
  for (std::size_t c = 0; c < dim; ++c) data[loser * dim + c] *= 0.5;
  Tensor kv2 = Tensor::matrix(5, dim, data);
  AttnDump dump2;
  Tensor out2 = select_att(q, kv2, w, masks, &dump2);
  REQUIRE(dump2.masks[0].survivors[0][0] == winner);
  for (std::size_t i = 0; i < base.numel(); ++i) CHECK(out2.at(i) == base.at(i));
}

TEST_CASE("select_att gradient matches central finite differences") {
  Rng rng(19);
  ParamStore store;
  const std::size_t dim = 4;
  CrossAttWeights w = make_weights(store, dim, 2, rng);
  AfsMasks masks = make_masks(store, 0.34, 0.85);
  Tensor q = rand_mat(1, dim, rng, true);
  Tensor kv = rand_mat(5, dim, rng, true);
  std::vector<Tensor> params = {q,    kv,   w.wq, w.bq,        w.wk,       w.bk,
                                w.wv, w.bv, w.wo, w.bo,        masks.k_raw,
                                masks.mix_raw};
  const double err =
      grad_check([&] { return sum(select_att(q, kv, w, masks)); }, params);
  CHECK(err <= 1e-4);
}

TEST_CASE("ICM frozen block receives no gradient, adapter does") {
  Rng rng(21), frozen_rng(1234);
  ParamStore store;
  Icm icm = Icm::create(store, "icm", 4, 2, rng, frozen_rng);
  CHECK(store.frozen("icm.frozen.attn.wq"));
  CHECK_FALSE(store.frozen("icm.lin.w"));
  CHECK_FALSE(icm.frozen.wq.requires_grad());
  CHECK(icm.lin_w.requires_grad());

  Tensor x = rand_mat(3, 4, rng, true);
  store.zero_grad();
  sum(icm.forward(x)).backward();
  // The adapter path accumulated gradient; the frozen block did not.
  double adapter = 0.0;
  for (double g : icm.lin_w.grad()) adapter += std::abs(g);
  CHECK(adapter > 0.0);
  for (double g : icm.frozen.wq.grad()) CHECK(g == 0.0);

  // And the optimizer never sees frozen arrays.
  for (const Tensor& t : store.trainable())
    CHECK_FALSE(&t.data() == &icm.frozen.wq.data());
}

TEST_CASE("ICM is deterministic for a fixed frozen seed") {
  Rng rng_a(33), rng_b(33), fr_a(1234), fr_b(1234);
  ParamStore sa, sb;
  Icm a = Icm::create(sa, "icm", 6, 2, rng_a, fr_a);
  Icm b = Icm::create(sb, "icm", 6, 2, rng_b, fr_b);
  Rng xr(1);
  Tensor x = rand_mat(2, 6, xr);
  Tensor ya = a.forward(x), yb = b.forward(x);
  for (std::size_t i = 0; i < ya.numel(); ++i) CHECK(ya.at(i) == yb.at(i));
}

TEST_CASE("SfaDirection returns a cls vector of the branch width") {
  Rng rng(25), frozen_rng(1234);
  ParamStore store;
  const std::size_t dim = 8, other_dim = 6;
  SfaConfig cfg;
  AfsMasks masks = AfsMasks::create(store, "afs", cfg);
  SfaDirection d = SfaDirection::create(store, "sfa", dim, other_dim, 2, rng, frozen_rng);
  Rng xr(2);
  Tensor other_cls = Tensor::from_data({other_dim}, [&] {
    std::vector<double> v(other_dim);
    for (double& e : v) e = xr.uniform(-1.0, 1.0);
    return v;
  }());
  Tensor patches = rand_mat(9, dim, xr);

  Tensor out_sel = d.forward(other_cls, patches, masks, SfaMode::kSelectAtt);
  Tensor out_cross = d.forward(other_cls, patches, masks, SfaMode::kCrossAtt);
  CHECK(out_sel.shape() == std::vector<std::size_t>{dim});
  CHECK(out_cross.shape() == std::vector<std::size_t>{dim});
  CHECK(all_finite(out_sel));
  CHECK(all_finite(out_cross));

  // Determinism: same inputs, same outputs.
  Tensor again = d.forward(other_cls, patches, masks, SfaMode::kSelectAtt);
  for (std::size_t i = 0; i < dim; ++i) CHECK(again.at(i) == out_sel.at(i));
}

TEST_CASE("select_att dump records mask metadata consistently") {
  Rng rng(27);
  ParamStore store;
  const std::size_t dim = 6;
  CrossAttWeights w = make_weights(store, dim, 2, rng);
  AfsMasks masks = make_masks(store, 1.0 / 3.0, 0.75);
  Tensor q = rand_mat(1, dim, rng);
  Tensor kv = rand_mat(6, dim, rng);
  AttnDump dump;
  select_att(q, kv, w, masks, &dump);
  CHECK(dump.n_keys == 6);
  CHECK(dump.heads == 2);
  REQUIRE(dump.mix.size() == 3);
  double mix_sum = 0.0;
  for (double v : dump.mix) mix_sum += v;
  CHECK(mix_sum == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> f = masks.fractions();
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(dump.masks[m].fraction == doctest::Approx(f[m]).epsilon(1e-12));
    const std::size_t want_k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(f[m] * 6.0)));
    CHECK(dump.masks[m].k_int == want_k);
    // heads x query-rows entries.
    CHECK(dump.masks[m].survivors.size() == 2 * 1);
  }
}
