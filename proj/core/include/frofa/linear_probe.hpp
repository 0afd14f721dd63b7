#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "frofa/checkpoint.hpp"
#include "frofa/feature_store.hpp"

namespace frofa {

// Row-major dense matrix in double precision.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct RidgeSolution {
  Matrix weight;              // C x S
  std::vector<double> bias;   // S entries, all zero without an intercept
  double lambda = 0.0;
  bool fit_bias = true;

  [[nodiscard]] std::size_t channels() const { return weight.rows; }
  [[nodiscard]] std::size_t classes() const { return weight.cols; }
};

// W = (X^T X + lambda I)^-1 X^T Y through a Cholesky solve. With fit_bias a
// constant-one column is appended and left unpenalized. Throws
// std::invalid_argument when the system is singular (only possible at
// lambda = 0).
RidgeSolution fit_ridge(const Matrix& X, const Matrix& Y, double lambda, bool fit_bias = true);

// Scores X W + b, E x S.
Matrix ridge_scores(const RidgeSolution& solution, const Matrix& X);
// argmax of the scores per row; ties go to the smallest class.
std::vector<std::uint32_t> predict(const RidgeSolution& solution, const Matrix& X);

double top1(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> labels);

// 2^e for e = -20..10.
std::vector<double> lambda_grid();

struct LambdaCandidate {
  double lambda = 0.0;
  double val_top1 = 0.0;
};

struct LambdaSweep {
  RidgeSolution best;
  std::vector<LambdaCandidate> candidates;
};

// Fits every lambda of lambda_grid() and keeps the best validation top-1;
// ties go to the larger lambda.
LambdaSweep sweep_lambda(const Matrix& X_train, const Matrix& Y_train, const Matrix& X_val,
                         std::span<const std::uint32_t> labels_val, bool fit_bias = true);

// Pooled features of a cache as an E x C matrix (token grids are mean-pooled),
// and one-hot targets as E x S.
Matrix feature_matrix(const FeatureCache& cache);
Matrix one_hot(std::span<const std::uint32_t> labels, std::size_t classes);

Checkpoint to_checkpoint(const RidgeSolution& solution);
RidgeSolution ridge_from_checkpoint(const Checkpoint& ckpt);

}  // namespace frofa
