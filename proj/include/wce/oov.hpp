#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wce/embeddings.hpp"
#include "wce/matrix.hpp"
#include "wce/rng.hpp"

namespace wce {

struct RegressorConfig {
  std::size_t hidden = 64;
  double dropout = 0.5;  // on the hidden layer, inverted scaling
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  double holdout_fraction = 0.1;
  std::size_t min_terms = 50;
  std::uint64_t seed = 0;
};

/// Two-layer network u -> ReLU(u W1 + b1) -> W2 + b2 mapping a pretrained
/// vector to a word-class vector.
struct Regressor {
  Matrix w1;                 // q x h
  std::vector<double> b1;    // h
  Matrix w2;                 // h x r
  std::vector<double> b2;    // r
  double dropout = 0.0;
  std::vector<std::string> output_names;  // classes (or components) of the output
  std::vector<std::string> terms;         // terms the regressor was fitted on

  std::size_t input_dim() const noexcept { return w1.rows(); }
  std::size_t hidden_dim() const noexcept { return w1.cols(); }
  std::size_t output_dim() const noexcept { return w2.cols(); }

  /// Deterministic forward pass (no dropout).
  std::vector<double> predict(std::span<const double> u) const;
  Matrix predict(const Matrix& u) const;

  void save(const std::filesystem::path& path) const;
  static Regressor load(const std::filesystem::path& path);
};

/// Regressor with all parameters zero.
Regressor zero_regressor(std::size_t q, std::size_t hidden, std::size_t r);

struct RegressorGradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

/// Mean squared error over all batch cells, with its gradient. Hidden-layer
/// dropout is drawn from rng when training.
double regressor_loss_and_gradients(const Regressor& reg, const Matrix& u, const Matrix& s,
                                    bool training, Rng& rng, RegressorGradients& grads);

double regressor_mse(const Regressor& reg, const Matrix& u, const Matrix& s);

struct RegressorLog {
  std::vector<double> train_mse;    // index 0 is before the first update
  std::vector<double> holdout_mse;  // same indexing
  std::size_t best_epoch = 0;
  double best_holdout_mse = 0.0;
  std::size_t train_terms = 0;
  std::size_t holdout_terms = 0;
};

struct RegressorResult {
  Regressor regressor;
  RegressorLog log;
};

/// Fits rows of u to rows of s (aligned by index) with Adam, holding out a
/// seeded fraction of the terms for early stopping.
RegressorResult train_regressor(const Matrix& u, const Matrix& s, std::vector<std::string> terms,
                                std::vector<std::string> output_names,
                                const RegressorConfig& config);

/// Uses the rows of e that carry both a pretrained and a word-class span.
RegressorResult train_regressor(const EmbeddingMatrix& e, const RegressorConfig& config);

/// Copy of e where rows with a pretrained span but an empty word-class span
/// get a predicted word-class span. Other rows are untouched.
EmbeddingMatrix impute_oov(const EmbeddingMatrix& e, const Regressor& reg);

struct OovPrediction {
  std::string term;
  std::string output_name;  // class with the highest predicted value
  double value = 0.0;
};

/// Terms of u not seen by the regressor, ranked by their highest predicted
/// class value (ties by term), truncated to top.
std::vector<OovPrediction> inspect_oov(const Regressor& reg, const PretrainedEmbeddings& u,
                                       std::size_t top);

}  // namespace wce
