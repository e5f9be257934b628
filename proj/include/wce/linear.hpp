#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "wce/corpus.hpp"
#include "wce/matrix.hpp"

namespace wce {

/// One-vs-rest logistic regression over dense document features.
struct LinearModel {
  Matrix weights;            // d x m
  std::vector<double> bias;  // m
  LabelMode mode = LabelMode::SingleLabel;
  double penalty = 1.0;

  /// Decision values X W + b.
  Matrix scores(const Matrix& x) const;
  /// argmax of the scores (single-label) or sigmoid >= 0.5 (multilabel).
  Matrix predict(const Matrix& x) const;

  void save(const std::filesystem::path& path) const;
  static LinearModel load(const std::filesystem::path& path);
};

struct LinearConfig {
  std::vector<double> penalties = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::size_t max_iterations = 300;
  double tolerance = 1e-7;  // stop when the gradient max-norm falls below this
};

/// Objective summed over classes:
///   (1/n) sum_ij BCE(sigmoid(x_i w_j + b_j), y_ij) + penalty / (2n) ||W||^2.
/// Gradients are written when the output pointers are non-null.
double logistic_objective(const Matrix& x, const Matrix& y, const Matrix& weights,
                          const std::vector<double>& bias, double penalty,
                          Matrix* grad_weights = nullptr, std::vector<double>* grad_bias = nullptr);

/// Full-batch accelerated gradient descent with step 1/L, L bounded from the
/// largest eigenvalue of [X 1]^T [X 1] (power iteration).
LinearModel train_logistic(const Matrix& x, const Matrix& y, LabelMode mode, double penalty,
                           const LinearConfig& config = {});

struct LinearSelection {
  LinearModel model;
  double validation_macro_f1 = 0.0;
  std::vector<double> grid_scores;  // validation macro-F1 per grid penalty
};

/// Trains one model per grid penalty and keeps the best on validation
/// macro-F1 (first of equals).
LinearSelection train_linear_baseline(const Matrix& train_x, const Matrix& train_y,
                                      const Matrix& val_x, const Matrix& val_y, LabelMode mode,
                                      const LinearConfig& config = {});

}  // namespace wce
