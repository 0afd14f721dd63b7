#pragma once

// Gradient-descent solver for the ridge objective
//   0.5 ||[X 1] W - Y||^2 + 0.5 lambda ||W without the bias row||^2,
// run to convergence with plain loops.

#include <algorithm>
#include <cmath>
#include <vector>

#include "frofa/linear_probe.hpp"
#include "frofa/rng.hpp"

namespace frofa::testing {

struct GdRidge {
  Matrix weight;             // C x S
  std::vector<double> bias;  // S
  std::size_t iterations = 0;
};

inline GdRidge gd_ridge(const Matrix& X, const Matrix& Y, double lambda, bool fit_bias = true,
                        double tol = 1e-12, std::size_t max_iter = 5'000'000) {
  const std::size_t E = X.rows, C = X.cols, S = Y.cols, P = C + (fit_bias ? 1 : 0);
  auto a = [&](std::size_t e, std::size_t j) { return j < C ? X(e, j) : 1.0; };

  // Largest eigenvalue of A^T A by power iteration sets the step size.
  std::vector<double> G(P * P, 0.0);
  for (std::size_t i = 0; i < P; ++i) {
    for (std::size_t j = 0; j < P; ++j) {
      for (std::size_t e = 0; e < E; ++e) G[i * P + j] += a(e, i) * a(e, j);
    }
  }
  std::vector<double> v(P, 1.0), w(P);
  double top = 0;
  for (int it = 0; it < 500; ++it) {
    double norm = 0;
    for (std::size_t i = 0; i < P; ++i) {
      w[i] = 0;
      for (std::size_t j = 0; j < P; ++j) w[i] += G[i * P + j] * v[j];
      norm += w[i] * w[i];
    }
    top = std::sqrt(norm);
    for (std::size_t i = 0; i < P; ++i) v[i] = w[i] / top;
  }
  const double step = 1.0 / (top + lambda);

  std::vector<double> Wt(P * S, 0.0), R(E * S), grad(P * S);
  GdRidge out;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t s = 0; s < S; ++s) {
        double acc = -Y(e, s);
        for (std::size_t j = 0; j < P; ++j) acc += a(e, j) * Wt[j * S + s];
        R[e * S + s] = acc;
      }
    }
    double gmax = 0;
    for (std::size_t j = 0; j < P; ++j) {
      for (std::size_t s = 0; s < S; ++s) {
        double acc = j < C ? lambda * Wt[j * S + s] : 0.0;
        for (std::size_t e = 0; e < E; ++e) acc += a(e, j) * R[e * S + s];
        grad[j * S + s] = acc;
        gmax = std::max(gmax, std::abs(acc));
      }
    }
    if (gmax < tol) break;
    for (std::size_t i = 0; i < P * S; ++i) Wt[i] -= step * grad[i];
  }
  out.weight = Matrix(C, S);
  for (std::size_t j = 0; j < C; ++j) {
    for (std::size_t s = 0; s < S; ++s) out.weight(j, s) = Wt[j * S + s];
  }
  out.bias.assign(S, 0.0);
  if (fit_bias) {
    for (std::size_t s = 0; s < S; ++s) out.bias[s] = Wt[C * S + s];
  }
  return out;
}

// E x C Gaussian features around per-class means, with one-hot targets.
struct RidgeProblem {
  Matrix X, Y;
  std::vector<std::uint32_t> labels;
};

inline RidgeProblem ridge_problem(std::size_t E, std::size_t C, std::size_t S, std::uint64_t seed) {
  Rng rng(RngKey(seed).fold("ridge_problem"));
  std::vector<double> means(S * C);
  for (auto& m : means) m = rng.normal();
  RidgeProblem p{Matrix(E, C), Matrix(E, S), {}};
  for (std::size_t e = 0; e < E; ++e) {
    const auto cls = static_cast<std::uint32_t>(e % S);
    p.labels.push_back(cls);
    for (std::size_t c = 0; c < C; ++c) p.X(e, c) = means[cls * C + c] + rng.normal();
    p.Y(e, cls) = 1.0;
  }
  return p;
}

inline double max_abs_delta(const RidgeSolution& sol, const GdRidge& gd) {
  double d = 0;
  for (std::size_t i = 0; i < sol.weight.values.size(); ++i) {
    d = std::max(d, std::abs(sol.weight.values[i] - gd.weight.values[i]));
  }
  for (std::size_t s = 0; s < sol.bias.size(); ++s) d = std::max(d, std::abs(sol.bias[s] - gd.bias[s]));
  return d;
}

}  // namespace frofa::testing
