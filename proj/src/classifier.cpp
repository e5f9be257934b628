#include "wce/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "serialization.hpp"
#include "wce/error.hpp"
#include "wce/eval.hpp"
#include "wce/parallel.hpp"

namespace wce {

namespace {

constexpr std::string_view kModelMagic = "WCMD";
constexpr std::uint32_t kModelVersion = 1;
constexpr double kClamp = 1e-12;

struct BatchState {
  Matrix pooled;  // B x d, after dropout and averaging
  Matrix probs;   // B x m
  std::vector<std::size_t> lengths;
  std::vector<std::vector<std::uint8_t>> masks;  // per doc: lengths[i] * r keep bits
};

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_dropout(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    fail(ErrorKind::Config, "dropout probability must lie in [0, 1), got " + std::to_string(p));
  }
}

void forward_state(const Model& model, std::span<const Sequence> batch, bool training, Rng& rng,
                   BatchState& st) {
  const EmbeddingMatrix& e = model.embeddings;
  const std::size_t d = e.dims();
  const std::size_t m = model.classes();
  const bool drop = training && model.dropout > 0.0 && e.r > 0;
  st.pooled = Matrix(batch.size(), d);
  st.probs = Matrix(batch.size(), m);
  st.lengths.assign(batch.size(), 0);
  st.masks.assign(batch.size(), {});
  std::vector<double> tmp(d);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t len = std::min(batch[i].size(), model.max_length);
    st.lengths[i] = len;
    if (drop) st.masks[i].assign(len * e.r, 1);
    auto acc = st.pooled.row(i);
    for (std::size_t t = 0; t < len; ++t) {
      const std::uint32_t id = batch[i][t];
      if (id >= e.rows()) continue;  // unknown token: zero vector
      const auto src = e.values.row(id);
      std::copy(src.begin(), src.end(), tmp.begin());
      std::span<std::uint8_t> mask;
      if (drop) mask = std::span<std::uint8_t>(st.masks[i]).subspan(t * e.r, e.r);
      supervised_dropout(tmp, e.q, e.r, model.dropout, training, rng, mask);
      for (std::size_t k = 0; k < d; ++k) acc[k] += tmp[k];
    }
    if (len > 0) {
      const double inv = 1.0 / static_cast<double>(len);
      for (auto& x : acc) x *= inv;
    }
    auto out = st.probs.row(i);
    for (std::size_t j = 0; j < m; ++j) out[j] = model.bias[j];
    for (std::size_t k = 0; k < d; ++k) {
      const double o = acc[k];
      if (o == 0.0) continue;
      const auto w = model.weights.row(k);
      for (std::size_t j = 0; j < m; ++j) out[j] += o * w[j];
    }
    if (model.mode == LabelMode::SingleLabel) {
      const double mx = *std::max_element(out.begin(), out.end());
      double sum = 0.0;
      for (auto& z : out) {
        z = std::exp(z - mx);
        sum += z;
      }
      for (auto& z : out) z /= sum;
    } else {
      for (auto& z : out) z = sigmoid(z);
    }
  }
}

double clamp_prob(double p) { return std::clamp(p, kClamp, 1.0 - kClamp); }

}  // namespace

void supervised_dropout(std::span<double> vec, std::size_t q, std::size_t r, double p,
                        bool training, Rng& rng, std::span<std::uint8_t> keep_mask) {
  check_dropout(p);
  if (vec.size() != q + r) {
    fail(ErrorKind::Dimension, "supervised_dropout: vector has " + std::to_string(vec.size()) +
                                   " entries, expected q + r = " + std::to_string(q + r));
  }
  if (!training || p == 0.0 || r == 0) return;
  const double keep = 1.0 - p;
  const double rescale = 1.0 / (1.0 - p * static_cast<double>(r) / static_cast<double>(q + r));
  for (std::size_t k = 0; k < q; ++k) vec[k] *= rescale;
  for (std::size_t k = 0; k < r; ++k) {
    const bool kept = rng.uniform() < keep;
    if (!keep_mask.empty()) keep_mask[k] = kept ? 1 : 0;
    // inverted dropout d(s) = s * mask / (1 - p), then scaled by (1 - p)
    const double dropped = kept ? vec[q + k] / keep : 0.0;
    vec[q + k] = keep * dropped * rescale;
  }
}

Matrix supervised_dropout(const Matrix& rows, std::size_t q, std::size_t r, double p,
                          bool training, Rng& rng) {
  Matrix out = rows;
  for (std::size_t i = 0; i < out.rows(); ++i) supervised_dropout(out.row(i), q, r, p, training, rng);
  return out;
}

Matrix forward(const Model& model, std::span<const Sequence> batch, bool training, Rng& rng) {
  check_dropout(model.dropout);
  BatchState st;
  forward_state(model, batch, training, rng, st);
  return std::move(st.probs);
}

double loss(const Matrix& probs, const Matrix& y, LabelMode mode) {
  if (probs.rows() != y.rows() || probs.cols() != y.cols()) {
    fail(ErrorKind::Dimension, "loss: probabilities and labels differ in shape");
  }
  if (probs.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      const double p = clamp_prob(probs(i, j));
      const double t = y(i, j);
      if (mode == LabelMode::SingleLabel) {
        if (t != 0.0) total -= t * std::log(p);
      } else {
        total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
      }
    }
  }
  const double denom = mode == LabelMode::SingleLabel
                           ? static_cast<double>(probs.rows())
                           : static_cast<double>(probs.rows() * probs.cols());
  return total / denom;
}

double loss_and_gradients(const Model& model, std::span<const Sequence> batch, const Matrix& y,
                          bool training, Rng& rng, Gradients& grads) {
  check_dropout(model.dropout);
  const EmbeddingMatrix& e = model.embeddings;
  const std::size_t d = e.dims();
  const std::size_t m = model.classes();
  if (y.rows() != batch.size() || y.cols() != m) {
    fail(ErrorKind::Dimension, "label batch does not match the input batch");
  }
  BatchState st;
  forward_state(model, batch, training, rng, st);
  const double value = loss(st.probs, y, model.mode);

  const double scale = model.mode == LabelMode::SingleLabel
                           ? 1.0 / static_cast<double>(batch.size())
                           : 1.0 / static_cast<double>(batch.size() * m);
  Matrix dz(batch.size(), m);
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) dz(i, j) = (st.probs(i, j) - y(i, j)) * scale;

  grads.weights = Matrix(d, m);
  grads.bias.assign(m, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto o = st.pooled.row(i);
    const auto g = dz.row(i);
    for (std::size_t j = 0; j < m; ++j) grads.bias[j] += g[j];
    for (std::size_t k = 0; k < d; ++k) {
      if (o[k] == 0.0) continue;
      auto gw = grads.weights.row(k);
      for (std::size_t j = 0; j < m; ++j) gw[j] += o[k] * g[j];
    }
  }

  const bool any_trainable = e.leading_trainable || e.trailing_trainable;
  if (!any_trainable) {
    grads.embeddings = Matrix();
    return value;
  }
  grads.embeddings = Matrix(e.rows(), d);
  const bool drop = training && model.dropout > 0.0 && e.r > 0;
  const double rescale =
      drop ? 1.0 / (1.0 - model.dropout * static_cast<double>(e.r) / static_cast<double>(d)) : 1.0;
  std::vector<double> go(d);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t len = st.lengths[i];
    if (len == 0) continue;
    std::fill(go.begin(), go.end(), 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      const auto w = model.weights.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += w[j] * dz(i, j);
      go[k] = acc / static_cast<double>(len);
    }
    for (std::size_t t = 0; t < len; ++t) {
      const std::uint32_t id = batch[i][t];
      if (id >= e.rows()) continue;
      auto ge = grads.embeddings.row(id);
      if (e.leading_trainable && e.has_pretrained[id]) {
        for (std::size_t k = 0; k < e.q; ++k) ge[k] += go[k] * rescale;
      }
      if (e.trailing_trainable && e.has_wce[id]) {
        for (std::size_t k = 0; k < e.r; ++k) {
          const bool kept = !drop || st.masks[i][t * e.r + k] != 0;
          if (kept) ge[e.q + k] += go[e.q + k] * rescale;
        }
      }
    }
  }
  return value;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    fail(ErrorKind::Dimension, "Adam: parameter size changed");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
  }
}

namespace {

Matrix gather_rows(const Matrix& y, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), y.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = y.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

struct OptimizerState {
  Adam weights;
  Adam bias;
  std::optional<Adam> embeddings;
};

// One pass over the documents in shuffled mini-batches; returns the mean loss.
double run_epoch(Model& model, std::span<const Sequence> docs, const Matrix& labels,
                 const ModelConfig& config, Rng& order_rng, Rng& dropout_rng,
                 OptimizerState& opt, std::size_t epoch) {
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  order_rng.shuffle(std::span<std::size_t>(order));
  std::size_t batches = (docs.size() + config.batch_size - 1) / config.batch_size;
  if (config.epoch_batches > 0) batches = std::min(batches, config.epoch_batches);

  const bool trainable = model.embeddings.leading_trainable || model.embeddings.trailing_trainable;
  double total = 0.0;
  std::size_t seen = 0;
  Gradients grads;
  std::vector<Sequence> batch;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * config.batch_size;
    const std::size_t end = std::min(docs.size(), begin + config.batch_size);
    const std::span<const std::size_t> idx(order.data() + begin, end - begin);
    batch.clear();
    for (const auto i : idx) batch.push_back(docs[i]);
    const Matrix y = gather_rows(labels, idx);
    const double value = loss_and_gradients(model, batch, y, true, dropout_rng, grads);
    if (!std::isfinite(value)) {
      fail(ErrorKind::Numeric, "non-finite training loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(b));
    }
    opt.weights.step(model.weights.data(), grads.weights.data());
    opt.bias.step(model.bias, grads.bias);
    if (trainable) opt.embeddings->step(model.embeddings.values.data(), grads.embeddings.data());
    if (!model.weights.all_finite()) {
      fail(ErrorKind::Numeric, "non-finite parameters at epoch " + std::to_string(epoch));
    }
    total += value * static_cast<double>(idx.size());
    seen += idx.size();
  }
  return seen ? total / static_cast<double>(seen) : 0.0;
}

void evaluate_into(const Model& model, std::span<const Sequence> docs, const Matrix& labels,
                   EpochLog& entry) {
  if (docs.empty()) return;
  const Matrix probs = predict_proba(model, docs);
  entry.val_loss = loss(probs, labels, model.mode);
  const F1Scores f1 = f1_scores(labels, predict_labels(probs, model.mode));
  entry.val_macro_f1 = f1.macro;
  entry.val_micro_f1 = f1.micro;
}

}  // namespace

TrainingData training_data(const LabeledCorpus& corpus, const EmbeddingMatrix& e) {
  TrainingData data;
  data.train = sequences_for(corpus.split(Split::Train), e);
  data.train_labels = dense_labels(corpus.encoded(Split::Train).labels);
  data.validation = sequences_for(corpus.split(Split::Validation), e);
  data.validation_labels = dense_labels(corpus.encoded(Split::Validation).labels);
  return data;
}

TrainResult train(const TrainingData& data, EmbeddingMatrix embeddings,
                  std::vector<std::string> class_names, const ModelConfig& config) {
  check_dropout(config.dropout);
  if (config.batch_size == 0) fail(ErrorKind::Config, "batch size must be > 0");
  if (config.max_length == 0) fail(ErrorKind::Config, "max length must be > 0");
  if (config.learning_rate <= 0.0) fail(ErrorKind::Config, "learning rate must be > 0");
  if (data.train.empty()) fail(ErrorKind::Config, "no training documents");
  const std::size_t m = class_names.size();
  if (data.train_labels.rows() != data.train.size() || data.train_labels.cols() != m ||
      data.validation_labels.rows() != data.validation.size() ||
      (data.validation_labels.cols() != m && !data.validation.empty())) {
    fail(ErrorKind::Dimension, "training data and label matrices disagree");
  }
  if (embeddings.dims() == 0) fail(ErrorKind::Config, "embedding layer has no columns");
  if (config.trainable) {
    embeddings.leading_trainable = embeddings.q > 0 && *config.trainable;
    embeddings.trailing_trainable = embeddings.r > 0 && *config.trainable;
  }

  TrainResult result;
  Model& model = result.model;
  model.embeddings = std::move(embeddings);
  model.mode = config.mode;
  model.dropout = config.dropout;
  model.max_length = config.max_length;
  model.class_names = std::move(class_names);
  const std::size_t d = model.embeddings.dims();

  Rng init_rng(derive_seed(config.seed, 1));
  Rng order_rng(derive_seed(config.seed, 2));
  Rng dropout_rng(derive_seed(config.seed, 3));

  const double bound = std::sqrt(6.0 / static_cast<double>(d + m));
  model.weights = Matrix(d, m);
  for (auto& w : model.weights.data()) w = init_rng.uniform(-bound, bound);
  model.bias.assign(m, 0.0);

  OptimizerState opt{Adam(model.weights.size(), config.learning_rate),
                     Adam(m, config.learning_rate), std::nullopt};
  if (model.embeddings.leading_trainable || model.embeddings.trailing_trainable) {
    opt.embeddings.emplace(model.embeddings.values.size(), config.learning_rate);
  }

  Matrix best_w = model.weights;
  std::vector<double> best_b = model.bias;
  Matrix best_e = model.embeddings.values;
  double best = -1.0;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = run_epoch(model, data.train, data.train_labels, config, order_rng,
                                 dropout_rng, opt, epoch);
    evaluate_into(model, data.validation, data.validation_labels, entry);
    result.log.push_back(entry);
    if (entry.val_macro_f1 > best) {
      best = entry.val_macro_f1;
      result.best_epoch = epoch;
      best_w = model.weights;
      best_b = model.bias;
      best_e = model.embeddings.values;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  model.weights = std::move(best_w);
  model.bias = std::move(best_b);
  model.embeddings.values = std::move(best_e);
  result.best_val_macro_f1 = best;

  if (config.final_validation_epoch && !data.validation.empty()) {
    EpochLog entry;
    entry.epoch = result.log.size() + 1;
    entry.phase = "validation";
    entry.train_loss = run_epoch(model, data.validation, data.validation_labels, config,
                                 order_rng, dropout_rng, opt, entry.epoch);
    evaluate_into(model, data.validation, data.validation_labels, entry);
    result.log.push_back(entry);
  }
  return result;
}

Matrix predict_proba(const Model& model, std::span<const Sequence> docs) {
  constexpr std::size_t kChunk = 256;
  Matrix out(docs.size(), model.classes());
  const std::size_t chunks = (docs.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t begin, std::size_t end) {
    Rng unused(0);
    for (std::size_t c = begin; c < end; ++c) {
      const std::size_t first = c * kChunk;
      const std::size_t last = std::min(docs.size(), first + kChunk);
      const Matrix probs = forward(model, docs.subspan(first, last - first), false, unused);
      for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto src = probs.row(i);
        std::copy(src.begin(), src.end(), out.row(first + i).begin());
      }
    }
  });
  return out;
}

Matrix predict_labels(const Matrix& probs, LabelMode mode) {
  Matrix out(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto p = probs.row(i);
    if (mode == LabelMode::SingleLabel) {
      if (p.empty()) continue;
      std::size_t arg = 0;
      for (std::size_t j = 1; j < p.size(); ++j)
        if (p[j] > p[arg]) arg = j;
      out(i, arg) = 1.0;
    } else {
      for (std::size_t j = 0; j < p.size(); ++j) out(i, j) = p[j] >= 0.5 ? 1.0 : 0.0;
    }
  }
  return out;
}

std::string to_json_line(const EpochLog& entry) {
  nlohmann::ordered_json j;
  j["epoch"] = entry.epoch;
  j["phase"] = entry.phase;
  j["tr_loss"] = entry.train_loss;
  j["va_loss"] = entry.val_loss;
  j["va_macro_f1"] = entry.val_macro_f1;
  j["va_micro_f1"] = entry.val_micro_f1;
  return j.dump();
}

void Model::save(const std::filesystem::path& path) const {
  io::BinaryWriter w(path, kModelMagic, kModelVersion);
  w.u8(mode == LabelMode::SingleLabel ? 0 : 1);
  w.f64(dropout);
  w.u64(max_length);
  w.strings(class_names);
  w.matrix(weights);
  w.f64s(bias);
  detail::write_embedding(w, embeddings);
  w.close();
}

Model Model::load(const std::filesystem::path& path) {
  io::BinaryReader r(path, kModelMagic, kModelVersion);
  Model model;
  model.mode = r.u8() == 0 ? LabelMode::SingleLabel : LabelMode::Multilabel;
  model.dropout = r.f64();
  model.max_length = r.u64();
  model.class_names = r.strings();
  model.weights = r.matrix();
  model.bias = r.f64s();
  model.embeddings = detail::read_embedding(r);
  r.expect_end();
  if (model.weights.rows() != model.embeddings.dims() || model.weights.cols() != model.bias.size() ||
      model.class_names.size() != model.bias.size()) {
    fail(ErrorKind::Parse, path.string() + ": inconsistent model shapes");
  }
  return model;
}

}  // namespace wce
