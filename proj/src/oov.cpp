#include "wce/oov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "binary_io.hpp"
#include "wce/classifier.hpp"
#include "wce/error.hpp"
#include "wce/parallel.hpp"

namespace wce {

namespace {

constexpr std::string_view kMagic = "WCRG";
constexpr std::uint32_t kVersion = 1;

struct Activations {
  Matrix hidden;  // post-ReLU, post-dropout
  Matrix mask;    // dropout multiplier per hidden cell (0 or 1/(1-p)), empty when not dropping
  Matrix output;
};

void forward(const Regressor& reg, const Matrix& u, bool training, Rng* rng, Activations& act) {
  const std::size_t h = reg.hidden_dim();
  const std::size_t r = reg.output_dim();
  if (u.cols() != reg.input_dim()) {
    fail(ErrorKind::Dimension, "regressor expects " + std::to_string(reg.input_dim()) +
                                   "-dimensional inputs, got " + std::to_string(u.cols()));
  }
  const bool drop = training && reg.dropout > 0.0;
  act.hidden = Matrix(u.rows(), h);
  act.mask = drop ? Matrix(u.rows(), h) : Matrix();
  act.output = Matrix(u.rows(), r);
  const double keep_scale = drop ? 1.0 / (1.0 - reg.dropout) : 1.0;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    auto hid = act.hidden.row(i);
    std::copy(reg.b1.begin(), reg.b1.end(), hid.begin());
    const auto ui = u.row(i);
    for (std::size_t k = 0; k < ui.size(); ++k) {
      if (ui[k] == 0.0) continue;
      const auto w = reg.w1.row(k);
      for (std::size_t j = 0; j < h; ++j) hid[j] += ui[k] * w[j];
    }
    for (std::size_t j = 0; j < h; ++j) {
      hid[j] = std::max(0.0, hid[j]);
      if (drop) {
        const double m = rng->uniform() < reg.dropout ? 0.0 : keep_scale;
        act.mask(i, j) = m;
        hid[j] *= m;
      }
    }
    auto out = act.output.row(i);
    std::copy(reg.b2.begin(), reg.b2.end(), out.begin());
    for (std::size_t j = 0; j < h; ++j) {
      if (hid[j] == 0.0) continue;
      const auto w = reg.w2.row(j);
      for (std::size_t c = 0; c < r; ++c) out[c] += hid[j] * w[c];
    }
  }
}

Matrix gather(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

std::vector<double> Regressor::predict(std::span<const double> u) const {
  Matrix m(1, u.size(), std::vector<double>(u.begin(), u.end()));
  const Matrix out = predict(m);
  return {out.data().begin(), out.data().end()};
}

Matrix Regressor::predict(const Matrix& u) const {
  constexpr std::size_t kChunk = 512;
  Matrix out(u.rows(), output_dim());
  const std::size_t chunks = (u.rows() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const std::size_t first = c * kChunk;
      const std::size_t last = std::min(u.rows(), first + kChunk);
      std::vector<std::size_t> idx(last - first);
      std::iota(idx.begin(), idx.end(), first);
      Activations act;
      forward(*this, gather(u, idx), false, nullptr, act);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto src = act.output.row(i);
        std::copy(src.begin(), src.end(), out.row(first + i).begin());
      }
    }
  });
  return out;
}

void Regressor::save(const std::filesystem::path& path) const {
  io::BinaryWriter w(path, kMagic, kVersion);
  w.f64(dropout);
  w.matrix(w1);
  w.f64s(b1);
  w.matrix(w2);
  w.f64s(b2);
  w.strings(output_names);
  w.strings(terms);
  w.close();
}

Regressor Regressor::load(const std::filesystem::path& path) {
  io::BinaryReader r(path, kMagic, kVersion);
  Regressor reg;
  reg.dropout = r.f64();
  reg.w1 = r.matrix();
  reg.b1 = r.f64s();
  reg.w2 = r.matrix();
  reg.b2 = r.f64s();
  reg.output_names = r.strings();
  reg.terms = r.strings();
  r.expect_end();
  if (reg.b1.size() != reg.w1.cols() || reg.w2.rows() != reg.w1.cols() ||
      reg.b2.size() != reg.w2.cols() ||
      (!reg.output_names.empty() && reg.output_names.size() != reg.w2.cols())) {
    fail(ErrorKind::Parse, path.string() + ": inconsistent regressor shapes");
  }
  return reg;
}

Regressor zero_regressor(std::size_t q, std::size_t hidden, std::size_t r) {
  Regressor reg;
  reg.w1 = Matrix(q, hidden);
  reg.b1.assign(hidden, 0.0);
  reg.w2 = Matrix(hidden, r);
  reg.b2.assign(r, 0.0);
  return reg;
}

double regressor_loss_and_gradients(const Regressor& reg, const Matrix& u, const Matrix& s,
                                    bool training, Rng& rng, RegressorGradients& grads) {
  if (u.rows() != s.rows() || s.cols() != reg.output_dim()) {
    fail(ErrorKind::Dimension, "regressor targets do not match the inputs");
  }
  Activations act;
  forward(reg, u, training, &rng, act);
  const std::size_t h = reg.hidden_dim();
  const std::size_t r = reg.output_dim();
  const double cells = static_cast<double>(u.rows() * r);

  Matrix dout(u.rows(), r);
  double value = 0.0;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (std::size_t c = 0; c < r; ++c) {
      const double diff = act.output(i, c) - s(i, c);
      value += diff * diff;
      dout(i, c) = 2.0 * diff / cells;
    }
  }
  value = cells > 0 ? value / cells : 0.0;

  grads.w1 = Matrix(reg.input_dim(), h);
  grads.b1.assign(h, 0.0);
  grads.w2 = Matrix(h, r);
  grads.b2.assign(r, 0.0);
  std::vector<double> dh(h);
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const auto hid = act.hidden.row(i);
    const auto g = dout.row(i);
    for (std::size_t c = 0; c < r; ++c) grads.b2[c] += g[c];
    for (std::size_t j = 0; j < h; ++j) {
      const auto w = reg.w2.row(j);
      double acc = 0.0;
      for (std::size_t c = 0; c < r; ++c) acc += w[c] * g[c];
      // ReLU passes gradient only where the (post-dropout) activation is live.
      dh[j] = hid[j] > 0.0 ? acc * (act.mask.empty() ? 1.0 : act.mask(i, j)) : 0.0;
      if (hid[j] == 0.0) continue;
      auto gw = grads.w2.row(j);
      for (std::size_t c = 0; c < r; ++c) gw[c] += hid[j] * g[c];
    }
    const auto ui = u.row(i);
    for (std::size_t j = 0; j < h; ++j) grads.b1[j] += dh[j];
    for (std::size_t k = 0; k < ui.size(); ++k) {
      if (ui[k] == 0.0) continue;
      auto gw = grads.w1.row(k);
      for (std::size_t j = 0; j < h; ++j) gw[j] += ui[k] * dh[j];
    }
  }
  return value;
}

double regressor_mse(const Regressor& reg, const Matrix& u, const Matrix& s) {
  if (u.rows() == 0) return 0.0;
  const Matrix pred = reg.predict(u);
  const auto p = pred.data();
  const auto t = s.data();
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) sum += (p[k] - t[k]) * (p[k] - t[k]);
  return p.empty() ? 0.0 : sum / static_cast<double>(p.size());
}

RegressorResult train_regressor(const Matrix& u, const Matrix& s, std::vector<std::string> terms,
                                std::vector<std::string> output_names,
                                const RegressorConfig& config) {
  if (u.rows() != s.rows() || terms.size() != u.rows()) {
    fail(ErrorKind::Dimension, "regressor inputs, targets and terms must be row-aligned");
  }
  if (u.rows() < config.min_terms) {
    fail(ErrorKind::Data, "only " + std::to_string(u.rows()) +
                              " terms have both a pretrained vector and a WCE; at least " +
                              std::to_string(config.min_terms) + " are needed");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    fail(ErrorKind::Config, "regressor dropout must lie in [0, 1)");
  }
  if (config.hidden == 0 || config.batch_size == 0) {
    fail(ErrorKind::Config, "hidden size and batch size must be > 0");
  }
  if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0)) {
    fail(ErrorKind::Config, "holdout fraction must lie in (0, 1)");
  }

  Rng split_rng(derive_seed(config.seed, 11));
  Rng init_rng(derive_seed(config.seed, 12));
  Rng order_rng(derive_seed(config.seed, 13));
  Rng drop_rng(derive_seed(config.seed, 14));

  std::vector<std::size_t> perm(u.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  split_rng.shuffle(std::span<std::size_t>(perm));
  std::size_t holdout = static_cast<std::size_t>(
      std::floor(config.holdout_fraction * static_cast<double>(u.rows())));
  holdout = std::max<std::size_t>(holdout, 1);
  std::vector<std::size_t> hold_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(holdout));
  std::vector<std::size_t> train_idx(perm.begin() + static_cast<std::ptrdiff_t>(holdout), perm.end());
  std::sort(hold_idx.begin(), hold_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  const Matrix u_train = gather(u, train_idx), s_train = gather(s, train_idx);
  const Matrix u_hold = gather(u, hold_idx), s_hold = gather(s, hold_idx);

  const std::size_t q = u.cols(), h = config.hidden, r = s.cols();
  RegressorResult result;
  Regressor& reg = result.regressor;
  reg = zero_regressor(q, h, r);
  reg.dropout = config.dropout;
  const double bound1 = std::sqrt(6.0 / static_cast<double>(q + h));
  const double bound2 = std::sqrt(6.0 / static_cast<double>(h + r));
  for (auto& w : reg.w1.data()) w = init_rng.uniform(-bound1, bound1);
  for (auto& w : reg.w2.data()) w = init_rng.uniform(-bound2, bound2);
  reg.output_names = std::move(output_names);
  reg.terms.reserve(train_idx.size());
  for (const auto i : train_idx) reg.terms.push_back(terms[i]);
  std::sort(reg.terms.begin(), reg.terms.end());

  Adam opt_w1(reg.w1.size(), config.learning_rate), opt_b1(h, config.learning_rate);
  Adam opt_w2(reg.w2.size(), config.learning_rate), opt_b2(r, config.learning_rate);

  RegressorLog& log = result.log;
  log.train_terms = train_idx.size();
  log.holdout_terms = hold_idx.size();
  log.train_mse.push_back(regressor_mse(reg, u_train, s_train));
  log.holdout_mse.push_back(regressor_mse(reg, u_hold, s_hold));
  log.best_holdout_mse = log.holdout_mse.back();
  Regressor best = reg;
  std::size_t stale = 0;

  std::vector<std::size_t> order(train_idx.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RegressorGradients g;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const double value =
          regressor_loss_and_gradients(reg, gather(u_train, idx), gather(s_train, idx), true,
                                       drop_rng, g);
      if (!std::isfinite(value)) {
        fail(ErrorKind::Numeric, "non-finite regressor loss at epoch " + std::to_string(epoch));
      }
      opt_w1.step(reg.w1.data(), g.w1.data());
      opt_b1.step(reg.b1, g.b1);
      opt_w2.step(reg.w2.data(), g.w2.data());
      opt_b2.step(reg.b2, g.b2);
    }
    log.train_mse.push_back(regressor_mse(reg, u_train, s_train));
    log.holdout_mse.push_back(regressor_mse(reg, u_hold, s_hold));
    if (log.holdout_mse.back() < log.best_holdout_mse) {
      log.best_holdout_mse = log.holdout_mse.back();
      log.best_epoch = epoch;
      best.w1 = reg.w1;
      best.b1 = reg.b1;
      best.w2 = reg.w2;
      best.b2 = reg.b2;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  reg.w1 = std::move(best.w1);
  reg.b1 = std::move(best.b1);
  reg.w2 = std::move(best.w2);
  reg.b2 = std::move(best.b2);
  return result;
}

RegressorResult train_regressor(const EmbeddingMatrix& e, const RegressorConfig& config) {
  if (e.leading_kind != SpanKind::Pretrained || e.trailing_kind != SpanKind::Supervised) {
    fail(ErrorKind::Config, std::string("OOV regression needs a pretrained+wce embedding, got '") +
                                to_string(e.variant) + "'");
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < e.rows(); ++i)
    if (e.has_pretrained[i] && e.has_wce[i]) rows.push_back(i);
  Matrix u(rows.size(), e.q), s(rows.size(), e.r);
  std::vector<std::string> terms;
  terms.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto row = e.values.row(rows[k]);
    std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(e.q), u.row(k).begin());
    std::copy(row.begin() + static_cast<std::ptrdiff_t>(e.q), row.end(), s.row(k).begin());
    terms.push_back(e.terms[rows[k]]);
  }
  return train_regressor(u, s, std::move(terms), e.trailing_names, config);
}

EmbeddingMatrix impute_oov(const EmbeddingMatrix& e, const Regressor& reg) {
  if (e.trailing_kind != SpanKind::Supervised || e.leading_kind != SpanKind::Pretrained) {
    fail(ErrorKind::Config, "imputation needs a pretrained+wce embedding");
  }
  if (reg.input_dim() != e.q || reg.output_dim() != e.r) {
    fail(ErrorKind::Dimension, "regressor maps " + std::to_string(reg.input_dim()) + " -> " +
                                   std::to_string(reg.output_dim()) + " but the embedding has q=" +
                                   std::to_string(e.q) + ", r=" + std::to_string(e.r));
  }
  EmbeddingMatrix out = e;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < e.rows(); ++i)
    if (e.has_pretrained[i] && !e.has_wce[i]) rows.push_back(i);
  if (rows.empty()) return out;
  Matrix u(rows.size(), e.q);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto row = e.values.row(rows[k]);
    std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(e.q), u.row(k).begin());
  }
  const Matrix pred = reg.predict(u);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto row = out.values.row(rows[k]);
    const auto p = pred.row(k);
    std::copy(p.begin(), p.end(), row.begin() + static_cast<std::ptrdiff_t>(e.q));
    out.has_wce[rows[k]] = 1;
  }
  return out;
}

std::vector<OovPrediction> inspect_oov(const Regressor& reg, const PretrainedEmbeddings& u,
                                       std::size_t top) {
  if (u.dim != reg.input_dim()) {
    fail(ErrorKind::Dimension, "pretrained vectors have " + std::to_string(u.dim) +
                                   " dimensions, the regressor expects " +
                                   std::to_string(reg.input_dim()));
  }
  const std::unordered_set<std::string> seen(reg.terms.begin(), reg.terms.end());
  std::vector<std::string> candidates;
  for (const auto& [term, vec] : u.vectors)
    if (!seen.contains(term)) candidates.push_back(term);
  std::sort(candidates.begin(), candidates.end());
  Matrix x(candidates.size(), u.dim);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& vec = u.vectors.at(candidates[i]);
    std::copy(vec.begin(), vec.end(), x.row(i).begin());
  }
  const Matrix pred = reg.predict(x);
  std::vector<OovPrediction> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto p = pred.row(i);
    if (p.empty()) continue;
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    OovPrediction item;
    item.term = candidates[i];
    item.output_name = best < reg.output_names.size() ? reg.output_names[best]
                                                      : "dim" + std::to_string(best + 1);
    item.value = p[best];
    out.push_back(std::move(item));
  }
  std::stable_sort(out.begin(), out.end(), [](const OovPrediction& a, const OovPrediction& b) {
    return a.value > b.value;
  });
  if (out.size() > top) out.resize(top);
  return out;
}

}  // namespace wce
