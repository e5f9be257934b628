#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wce/corpus.hpp"
#include "wce/embeddings.hpp"
#include "wce/matrix.hpp"
#include "wce/rng.hpp"

namespace wce {

struct ModelConfig {
  LabelMode mode = LabelMode::SingleLabel;
  double dropout = 0.0;  // supervised dropout probability p in [0, 1)
  double learning_rate = 1e-3;
  std::size_t batch_size = 100;
  std::size_t max_length = 500;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  /// Caps the batches per epoch; 0 means a full pass over the training set.
  std::size_t epoch_batches = 0;
  /// Run one last epoch on the validation split after restoring the best checkpoint.
  bool final_validation_epoch = true;
  /// When set, overrides the embedding's per-span trainable flags.
  std::optional<bool> trainable;
  std::uint64_t seed = 0;
};

/// Mean-pooling classifier: embed, supervised dropout, average, affine, softmax/sigmoid.
struct Model {
  EmbeddingMatrix embeddings;
  Matrix weights;            // (q + r) x m
  std::vector<double> bias;  // m
  LabelMode mode = LabelMode::SingleLabel;
  double dropout = 0.0;
  std::size_t max_length = 500;
  std::vector<std::string> class_names;

  std::size_t classes() const noexcept { return bias.size(); }

  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);
};

/// D(E) applied to one (q + r)-vector in place. The leading q entries are
/// never masked; each trailing entry is kept with probability 1 - p (inverted
/// dropout then multiplied by 1 - p, i.e. a plain 0/1 mask); the whole vector
/// is divided by 1 - p r / (q + r). Identity when !training or p == 0.
/// When keep_mask is non-empty it receives the r mask bits.
void supervised_dropout(std::span<double> vec, std::size_t q, std::size_t r, double p,
                        bool training, Rng& rng, std::span<std::uint8_t> keep_mask = {});

/// Row-wise supervised dropout over a batch of vectors.
Matrix supervised_dropout(const Matrix& rows, std::size_t q, std::size_t r, double p,
                          bool training, Rng& rng);

/// Probabilities (batch x m). Sequences index embedding rows; ids >=
/// embeddings.rows() are unknown tokens with a zero vector. Sequences longer
/// than max_length are truncated; empty ones pool to zero.
Matrix forward(const Model& model, std::span<const Sequence> batch, bool training, Rng& rng);

/// Mean cross-entropy (single-label) or mean binary cross-entropy over all
/// cells (multilabel); probabilities clamped to [1e-12, 1 - 1e-12].
double loss(const Matrix& probs, const Matrix& y, LabelMode mode);

struct Gradients {
  Matrix weights;
  std::vector<double> bias;
  Matrix embeddings;  // empty unless a span is trainable
};

/// Loss on the batch plus its gradient wrt W, b and the trainable embedding spans.
double loss_and_gradients(const Model& model, std::span<const Sequence> batch, const Matrix& y,
                          bool training, Rng& rng, Gradients& grads);

/// Adam with bias correction.
class Adam {
 public:
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);
  void step(std::span<double> params, std::span<const double> grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::string phase = "train";  // "train" or "validation" (final epoch)
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_macro_f1 = 0.0;
  double val_micro_f1 = 0.0;
};

struct TrainingData {
  std::vector<Sequence> train;
  Matrix train_labels;
  std::vector<Sequence> validation;
  Matrix validation_labels;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_macro_f1 = 0.0;
};

/// Xavier-uniform W, zero b, Adam; early stopping on validation macro-F1.
TrainResult train(const TrainingData& data, EmbeddingMatrix embeddings,
                  std::vector<std::string> class_names, const ModelConfig& config);

/// Convenience: builds TrainingData from the corpus' train/validation splits.
TrainingData training_data(const LabeledCorpus& corpus, const EmbeddingMatrix& e);

Matrix predict_proba(const Model& model, std::span<const Sequence> docs);

/// argmax with ties to the lowest index (single-label) or p >= 0.5 (multilabel).
Matrix predict_labels(const Matrix& probs, LabelMode mode);

std::string to_json_line(const EpochLog& entry);

}  // namespace wce
