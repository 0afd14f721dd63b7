#include <doctest.h>

#include <cmath>
#include <fstream>

#include "frofa/checkpoint.hpp"
#include "frofa/map_head.hpp"
#include "map_head_oracle.hpp"
#include "test_support.hpp"

using namespace frofa;
using T = MapHeadParams;

TEST_CASE("fresh heads emit zero logits") {
  const auto p = init_map_head(8, 5, 2, 3);
  for (float w : p.tensor(T::head_kernel)) CHECK(w == 0.0f);
  for (float w : p.tensor(T::head_bias)) CHECK(w == 0.0f);
  for (float w : p.tensor(T::ln_scale)) CHECK(w == 1.0f);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto out = forward(p, testing::random_tensor(9, 8, s));
    for (float l : out.logits) CHECK(l == 0.0f);
  }
  CHECK(init_map_head(8, 5, 2, 3) == p);
  CHECK_FALSE(init_map_head(8, 5, 2, 4) == p);
}

TEST_CASE("head count must divide C") {
  CHECK_THROWS_AS(init_map_head(8, 3, 3, 0), std::invalid_argument);
  CHECK(default_head_count(8) == 1);
  CHECK(default_head_count(768) == 12);
  CHECK(default_head_count(192) == 3);
}

TEST_CASE("forward matches the double reference") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = testing::random_head(8, 3, 2, seed);
    const auto x = testing::random_tensor(6, 8, seed + 100, -1.0, 1.0);
    const auto got = forward(p, x).logits;
    const auto want = testing::ref_logits(p, x);
    for (std::size_t s = 0; s < 3; ++s) CHECK(got[s] == doctest::Approx(want[s]).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("a single token passes straight through attention") {
  auto p = testing::random_head(8, 3, 2, 7);
  for (auto& w : p.tensor(T::mlp2_kernel)) w = 0.0f;
  for (auto& w : p.tensor(T::mlp2_bias)) w = 0.0f;
  const auto x = testing::random_tensor(1, 8, 8, -1.0, 1.0);
  std::vector<double> v(8), o(8);
  for (std::size_t r = 0; r < 8; ++r) {
    double acc = p.ptr(T::value_bias)[r];
    for (std::size_t c = 0; c < 8; ++c) acc += static_cast<double>(p.ptr(T::value_kernel)[r * 8 + c]) * x.at(0, c);
    v[r] = acc;
  }
  for (std::size_t r = 0; r < 8; ++r) {
    double acc = p.ptr(T::out_bias)[r];
    for (std::size_t c = 0; c < 8; ++c) acc += static_cast<double>(p.ptr(T::out_kernel)[r * 8 + c]) * v[c];
    o[r] = acc;
  }
  const auto pooled = forward(p, x).pooled;
  for (std::size_t c = 0; c < 8; ++c) CHECK(pooled[c] == doctest::Approx(o[c]).epsilon(1e-5).scale(1.0));
}

TEST_CASE("token order does not matter") {
  const auto p = testing::random_head(8, 4, 2, 9);
  const auto x = testing::random_tensor(9, 8, 10);
  FeatureTensor perm(9, 8);
  Rng rng(RngKey(1));
  const auto order = rng.permutation(9);
  for (std::size_t n = 0; n < 9; ++n) {
    for (std::size_t c = 0; c < 8; ++c) perm.at(n, c) = x.at(order[n], c);
  }
  const auto a = forward(p, x).logits;
  const auto b = forward(p, perm).logits;
  for (std::size_t s = 0; s < 4; ++s) CHECK(std::abs(a[s] - b[s]) < 1e-6 * std::max(1.0f, std::abs(a[s])));
}

TEST_CASE("sigmoid cross-entropy values") {
  const std::vector<float> zeros(4, 0.0f);
  const std::vector<float> onehot{0, 1, 0, 0};
  CHECK(sigmoid_ce(zeros, onehot) == doctest::Approx(4 * std::log(2.0)));
  const std::vector<float> sat{-100, 100, -100, -100};
  CHECK(sigmoid_ce(sat, onehot) < 1e-6);
  CHECK(std::isfinite(sigmoid_ce(std::vector<float>{100, -100}, std::vector<float>{0, 1})));
  CHECK(sigmoid_ce(std::vector<float>{0, 0}, std::vector<float>{0.5f, 0.5f}) == doctest::Approx(2 * std::log(2.0)));
  CHECK(loss_sigmoid_ce({zeros, sat}, {onehot, onehot}) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("analytic gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = testing::random_head(8, 3, 2, seed);
    const auto batch = testing::random_batch(2, 4, 8, 3, seed);
    const auto r = testing::check_gradient(p, batch);
    CAPTURE(seed);
    CAPTURE(r.worst_tensor);
    CHECK(r.worst_rel < 1e-2);
  }
}

TEST_CASE("weighted examples act as multiplicities") {
  const auto p = testing::random_head(8, 3, 2, 11);
  auto batch = testing::random_batch(2, 4, 8, 3, 11);
  batch[1].weight = 2.0f;
  CHECK(testing::check_gradient(p, batch).worst_rel < 1e-2);

  auto dup = batch;
  dup[1].weight = 1.0f;
  dup.push_back(dup[1]);
  auto g1 = p.zeros_like();
  auto g2 = p.zeros_like();
  const double l1 = loss_and_gradient(p, testing::as_weighted(batch), &g1);
  const double l2 = loss_and_gradient(p, testing::as_weighted(dup), &g2);
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-6));
  for (std::size_t i = 0; i < g1.flat().size(); ++i) CHECK(g1.flat()[i] == doctest::Approx(g2.flat()[i]).epsilon(1e-4).scale(1e-6));
}

TEST_CASE("duplicating the whole batch leaves gradients unchanged") {
  const auto p = testing::random_head(8, 3, 2, 12);
  const auto batch = testing::random_batch(3, 5, 8, 3, 12);
  auto twice = batch;
  twice.insert(twice.end(), batch.begin(), batch.end());
  auto g1 = p.zeros_like();
  auto g2 = p.zeros_like();
  loss_and_gradient(p, testing::as_weighted(batch), &g1);
  loss_and_gradient(p, testing::as_weighted(twice), &g2);
  for (std::size_t i = 0; i < g1.flat().size(); ++i) CHECK(g1.flat()[i] == doctest::Approx(g2.flat()[i]).epsilon(1e-5).scale(1e-7));
}

TEST_CASE("classifier bias gradient at init is 0.5 minus the mean label") {
  const auto p = init_map_head(8, 3, 2, 5);
  const auto batch = testing::random_batch(4, 4, 8, 3, 5);
  auto g = p.zeros_like();
  loss_and_gradient(p, testing::as_weighted(batch), &g);
  for (std::size_t s = 0; s < 3; ++s) {
    double ybar = 0;
    for (const auto& ex : batch) ybar += ex.labels[s];
    ybar /= 4;
    CHECK(g.tensor(T::head_bias)[s] == doctest::Approx(0.5 - ybar).epsilon(1e-6));
  }
}

TEST_CASE("argmax ties go to the smallest index") {
  CHECK(argmax(std::vector<float>{0.1f, 0.9f}) == 1);
  CHECK(argmax(std::vector<float>{0.5f, 0.5f}) == 0);
  CHECK(argmax(std::vector<float>{0.0f, 0.0f, 0.0f}) == 0);
}

TEST_CASE("channel mismatch is rejected") {
  const auto p = init_map_head(8, 3, 2, 1);
  CHECK_THROWS_AS(forward(p, testing::random_tensor(4, 6, 1)), std::invalid_argument);
}

TEST_CASE("checkpoint reload is bit exact") {
  testing::TempDir dir("ckpt");
  const auto p = testing::random_head(8, 3, 2, 13);
  write_checkpoint(to_checkpoint(p), dir / "head.bin");
  CHECK(std::filesystem::exists(checkpoint_index_path(dir / "head.bin")));
  const auto back = map_head_from_checkpoint(read_checkpoint(dir / "head.bin"));
  CHECK(back == p);
  std::ifstream idx(checkpoint_index_path(dir / "head.bin"));
  const auto j = nlohmann::json::parse(idx);
  CHECK(j["tensors"].size() == T::kTensorCount);
  CHECK(j["tensors"][0]["name"] == "probe");
}

TEST_CASE("decay applies to the probe and kernels only") {
  const MapHeadParams p(8, 3, 2);
  for (const auto& s : p.slices()) {
    const bool kernel = s.shape.size() == 2 || s.name == "probe";
    CAPTURE(s.name);
    CHECK(s.decayed == kernel);
  }
}
