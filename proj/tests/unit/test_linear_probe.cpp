#include <doctest.h>

#include <cmath>

#include "frofa/linear_probe.hpp"
#include "ridge_oracle.hpp"
#include "test_support.hpp"

using namespace frofa;

namespace {

double frobenius(const Matrix& m) {
  double s = 0;
  for (double v : m.values) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("one-dimensional closed form") {
  Matrix X(1, 1, 1.0), Y(1, 1, 1.0);
  const auto sol = fit_ridge(X, Y, 1.0, false);
  CHECK(sol.weight(0, 0) == doctest::Approx(0.5));
  CHECK(sol.bias == std::vector<double>{0.0});
}

TEST_CASE("lambda zero interpolates a square system") {
  const auto p = testing::ridge_problem(5, 5, 5, 1);
  const auto sol = fit_ridge(p.X, p.Y, 0.0, false);
  const auto scores = ridge_scores(sol, p.X);
  for (std::size_t i = 0; i < 25; ++i) CHECK(scores.values[i] == doctest::Approx(p.Y.values[i]).scale(1.0).epsilon(1e-8));
  CHECK(top1(predict(sol, p.X), p.labels) == 1.0);
}

TEST_CASE("closed form matches converged gradient descent") {
  const auto p = testing::ridge_problem(50, 8, 5, 2);
  for (double lambda : {std::pow(2.0, -5), 1.0, std::pow(2.0, 5)}) {
    for (bool bias : {true, false}) {
      const auto sol = fit_ridge(p.X, p.Y, lambda, bias);
      const auto gd = testing::gd_ridge(p.X, p.Y, lambda, bias);
      CAPTURE(lambda);
      CHECK(testing::max_abs_delta(sol, gd) < 1e-4);
    }
  }
}

TEST_CASE("normal equation residual") {
  const auto p = testing::ridge_problem(40, 6, 4, 3);
  const double lambda = 0.25;
  const auto sol = fit_ridge(p.X, p.Y, lambda, false);
  double res = 0, rhs = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t s = 0; s < 4; ++s) {
      double lhs = lambda * sol.weight(i, s), b = 0;
      for (std::size_t e = 0; e < 40; ++e) {
        double xw = 0;
        for (std::size_t j = 0; j < 6; ++j) xw += p.X(e, j) * sol.weight(j, s);
        lhs += p.X(e, i) * xw;
        b += p.X(e, i) * p.Y(e, s);
      }
      res += (lhs - b) * (lhs - b);
      rhs += b * b;
    }
  }
  CHECK(std::sqrt(res) < 1e-6 * std::sqrt(rhs));
}

TEST_CASE("lambda grid and sweep tie-break") {
  const auto grid = lambda_grid();
  REQUIRE(grid.size() == 31);
  CHECK(grid.front() == std::ldexp(1.0, -20));
  CHECK(grid.back() == 1024.0);

  Matrix X(2, 1), Y(2, 2), Xv(1, 1, 2.0);
  X(0, 0) = 1;
  X(1, 0) = -1;
  Y(0, 0) = 1;
  Y(1, 1) = 1;
  const std::vector<std::uint32_t> yv{0};
  const auto sweep = sweep_lambda(X, Y, Xv, yv, false);
  CHECK(sweep.candidates.size() == 31);
  for (const auto& c : sweep.candidates) CHECK(c.val_top1 == 1.0);
  CHECK(sweep.best.lambda == 1024.0);

  const auto p = testing::ridge_problem(60, 8, 5, 4);
  const auto v = testing::ridge_problem(40, 8, 5, 5);
  const auto s2 = sweep_lambda(p.X, p.Y, v.X, v.labels);
  CHECK(s2.candidates.size() == 31);
  double best = 0, best_lambda = 0;
  for (const auto& c : s2.candidates) {
    if (c.val_top1 >= best) {
      best = c.val_top1;
      best_lambda = c.lambda;
    }
  }
  CHECK(s2.best.lambda == best_lambda);
  const auto again = sweep_lambda(p.X, p.Y, v.X, v.labels);
  CHECK(again.best.weight.values == s2.best.weight.values);
}

TEST_CASE("one example per class stays solvable for every positive lambda") {
  const auto p = testing::ridge_problem(4, 8, 4, 6);
  for (double lambda : lambda_grid()) {
    const auto sol = fit_ridge(p.X, p.Y, lambda);
    for (double w : sol.weight.values) CHECK(std::isfinite(w));
  }
}

TEST_CASE("predict breaks ties toward the smallest class") {
  RidgeSolution sol;
  sol.weight = Matrix(1, 2);
  sol.bias = {0.1, 0.9};
  CHECK(predict(sol, Matrix(1, 1, 1.0)) == std::vector<std::uint32_t>{1});
  sol.bias = {0.5, 0.5};
  CHECK(predict(sol, Matrix(1, 1, 1.0)) == std::vector<std::uint32_t>{0});
  const std::vector<std::uint32_t> a{0, 1, 2}, b{0, 1, 1};
  CHECK(top1(a, b) == doctest::Approx(2.0 / 3));
}

TEST_CASE("row permutation does not change the solution") {
  const auto p = testing::ridge_problem(30, 6, 3, 7);
  Rng rng(RngKey(1));
  const auto order = rng.permutation(30);
  Matrix Xp(30, 6), Yp(30, 3);
  for (std::size_t e = 0; e < 30; ++e) {
    for (std::size_t c = 0; c < 6; ++c) Xp(e, c) = p.X(order[e], c);
    for (std::size_t s = 0; s < 3; ++s) Yp(e, s) = p.Y(order[e], s);
  }
  const auto a = fit_ridge(p.X, p.Y, 0.5);
  const auto b = fit_ridge(Xp, Yp, 0.5);
  for (std::size_t i = 0; i < a.weight.values.size(); ++i) CHECK(std::abs(a.weight.values[i] - b.weight.values[i]) < 1e-6);
}

TEST_CASE("weights shrink monotonically with lambda") {
  const auto p = testing::ridge_problem(30, 6, 3, 8);
  for (bool bias : {true, false}) {
    double prev = INFINITY;
    for (double lambda : lambda_grid()) {
      const double n = frobenius(fit_ridge(p.X, p.Y, lambda, bias).weight);
      CHECK(n <= prev * (1 + 1e-9));
      prev = n;
    }
  }
}

TEST_CASE("singular system at lambda zero") {
  Matrix X(4, 2);
  for (std::size_t e = 0; e < 4; ++e) X(e, 0) = X(e, 1) = static_cast<double>(e);
  CHECK_THROWS_AS(fit_ridge(X, Matrix(4, 2, 1.0), 0.0, false), std::invalid_argument);
  CHECK_NOTHROW(fit_ridge(X, Matrix(4, 2, 1.0), 1e-3, false));
}

TEST_CASE("feature matrix mean-pools tokens and the probe checkpoint round-trips") {
  SyntheticSpec spec;
  spec.num_classes = 3;
  spec.per_class = 4;
  const auto cache = generate_synthetic(spec);
  const auto X = feature_matrix(cache);
  CHECK(X.rows == 12);
  CHECK(X.cols == 8);
  double m = 0;
  for (std::size_t n = 0; n < 16; ++n) m += cache.features[5].at(n, 2);
  CHECK(X(5, 2) == doctest::Approx(m / 16).epsilon(1e-6));
  const auto Y = one_hot(cache.labels, 3);
  CHECK(Y(5, cache.labels[5]) == 1.0);

  const auto sol = fit_ridge(X, Y, 0.5);
  testing::TempDir dir("ridge");
  write_checkpoint(to_checkpoint(sol), dir / "r.bin");
  const auto back = ridge_from_checkpoint(read_checkpoint(dir / "r.bin"));
  CHECK(back.lambda == 0.5);
  CHECK(back.fit_bias);
  for (std::size_t i = 0; i < sol.weight.values.size(); ++i) {
    CHECK(back.weight.values[i] == static_cast<float>(sol.weight.values[i]));
  }
  CHECK(predict(back, X) == predict(sol, X));
}
