#include "frofa/linear_probe.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace frofa {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> view(const Matrix& m) {
  return {m.values.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols)};
}

}  // namespace

RidgeSolution fit_ridge(const Matrix& X, const Matrix& Y, double lambda, bool fit_bias) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
  if (X.rows != Y.rows || X.rows == 0) throw std::invalid_argument("ridge needs matching, non-empty X and Y");
  const auto E = static_cast<Eigen::Index>(X.rows);
  const auto C = static_cast<Eigen::Index>(X.cols);
  const Eigen::Index D = C + (fit_bias ? 1 : 0);

  Eigen::MatrixXd A(E, D);
  A.leftCols(C) = view(X);
  if (fit_bias) A.col(C).setOnes();
  Eigen::MatrixXd gram = A.transpose() * A;
  gram.diagonal().head(C).array() += lambda;
  const Eigen::MatrixXd rhs = A.transpose() * view(Y);

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw std::invalid_argument("singular system: X^T X is not invertible at lambda=" + std::to_string(lambda));
  }
  const Eigen::MatrixXd W = llt.solve(rhs);

  RidgeSolution sol;
  sol.lambda = lambda;
  sol.fit_bias = fit_bias;
  sol.weight = Matrix(X.cols, Y.cols);
  sol.bias.assign(Y.cols, 0.0);
  for (Eigen::Index c = 0; c < C; ++c) {
    for (Eigen::Index s = 0; s < W.cols(); ++s) sol.weight(c, s) = W(c, s);
  }
  if (fit_bias) {
    for (Eigen::Index s = 0; s < W.cols(); ++s) sol.bias[s] = W(C, s);
  }
  return sol;
}

Matrix ridge_scores(const RidgeSolution& solution, const Matrix& X) {
  if (X.cols != solution.channels()) {
    throw std::invalid_argument("channel mismatch: X has " + std::to_string(X.cols) +
                                " columns, probe expects " + std::to_string(solution.channels()));
  }
  Matrix out(X.rows, solution.classes());
  for (std::size_t e = 0; e < X.rows; ++e) {
    for (std::size_t s = 0; s < out.cols; ++s) {
      double acc = solution.bias[s];
      for (std::size_t c = 0; c < X.cols; ++c) acc += X(e, c) * solution.weight(c, s);
      out(e, s) = acc;
    }
  }
  return out;
}

std::vector<std::uint32_t> predict(const RidgeSolution& solution, const Matrix& X) {
  const Matrix scores = ridge_scores(solution, X);
  std::vector<std::uint32_t> out(X.rows);
  for (std::size_t e = 0; e < X.rows; ++e) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < scores.cols; ++s) {
      if (scores(e, s) > scores(e, best)) best = s;
    }
    out[e] = static_cast<std::uint32_t>(best);
  }
  return out;
}

double top1(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> labels) {
  if (predicted.size() != labels.size() || labels.empty()) {
    throw std::invalid_argument("top-1 needs matching, non-empty predictions and labels");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<double> lambda_grid() {
  std::vector<double> out;
  for (int e = -20; e <= 10; ++e) out.push_back(std::ldexp(1.0, e));
  return out;
}

LambdaSweep sweep_lambda(const Matrix& X_train, const Matrix& Y_train, const Matrix& X_val,
                         std::span<const std::uint32_t> labels_val, bool fit_bias) {
  if (labels_val.empty()) throw std::invalid_argument("lambda sweep needs a non-empty validation set");
  LambdaSweep out;
  double best_acc = -1.0;
  for (double lambda : lambda_grid()) {
    RidgeSolution sol = fit_ridge(X_train, Y_train, lambda, fit_bias);
    const double acc = top1(predict(sol, X_val), labels_val);
    out.candidates.push_back({lambda, acc});
    // The grid ascends, so >= keeps the largest lambda among ties.
    if (acc >= best_acc) {
      best_acc = acc;
      out.best = std::move(sol);
    }
  }
  return out;
}

Matrix feature_matrix(const FeatureCache& cache) {
  const std::size_t C = cache.manifest.channels;
  Matrix X(cache.size(), C);
  for (std::size_t e = 0; e < cache.size(); ++e) {
    const auto& f = cache.features[e];
    for (std::size_t n = 0; n < f.tokens(); ++n) {
      for (std::size_t c = 0; c < C; ++c) X(e, c) += f.at(n, c);
    }
    for (std::size_t c = 0; c < C; ++c) X(e, c) /= static_cast<double>(f.tokens());
  }
  return X;
}

Matrix one_hot(std::span<const std::uint32_t> labels, std::size_t classes) {
  Matrix Y(labels.size(), classes);
  for (std::size_t e = 0; e < labels.size(); ++e) {
    if (labels[e] >= classes) throw std::invalid_argument("label out of range");
    Y(e, labels[e]) = 1.0;
  }
  return Y;
}

Checkpoint to_checkpoint(const RidgeSolution& solution) {
  Checkpoint ckpt;
  ckpt.meta = {{"model", "ridge"},
               {"lambda", solution.lambda},
               {"fit_bias", solution.fit_bias},
               {"channels", solution.channels()},
               {"classes", solution.classes()}};
  NamedTensor w{"weight", {solution.channels(), solution.classes()}, {}};
  for (double v : solution.weight.values) w.values.push_back(static_cast<float>(v));
  NamedTensor b{"bias", {solution.classes()}, {}};
  for (double v : solution.bias) b.values.push_back(static_cast<float>(v));
  ckpt.tensors = {std::move(w), std::move(b)};
  return ckpt;
}

RidgeSolution ridge_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.meta.value("model", "") != "ridge") throw std::runtime_error("checkpoint is not a ridge probe");
  RidgeSolution sol;
  sol.lambda = ckpt.meta.at("lambda").get<double>();
  sol.fit_bias = ckpt.meta.at("fit_bias").get<bool>();
  const auto& w = ckpt.get("weight");
  const auto& b = ckpt.get("bias");
  if (w.shape.size() != 2 || b.shape.size() != 1 || b.shape[0] != w.shape[1]) {
    throw std::runtime_error("ridge checkpoint has inconsistent shapes");
  }
  sol.weight = Matrix(w.shape[0], w.shape[1]);
  for (std::size_t i = 0; i < w.values.size(); ++i) sol.weight.values[i] = w.values[i];
  sol.bias.assign(b.values.begin(), b.values.end());
  return sol;
}

}  // namespace frofa
