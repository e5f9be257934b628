#include "wce/linear.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "wce/error.hpp"
#include "wce/eval.hpp"
#include "wce/parallel.hpp"
#include "wce/rng.hpp"

namespace wce {

namespace {

constexpr std::string_view kMagic = "WCLR";
constexpr std::uint32_t kVersion = 1;

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  Matrix z(x.rows(), w.cols());
  parallel_for(x.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto out = z.row(i);
      std::copy(b.begin(), b.end(), out.begin());
      const auto xi = x.row(i);
      for (std::size_t k = 0; k < xi.size(); ++k) {
        if (xi[k] == 0.0) continue;
        const auto wk = w.row(k);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += xi[k] * wk[j];
      }
    }
  });
  return z;
}

// Largest eigenvalue of [X 1]^T [X 1].
double gram_spectral_norm(const Matrix& x) {
  const std::size_t d = x.cols() + 1;
  std::vector<double> v(d), xv(x.rows()), next(d);
  Rng rng(17);
  for (auto& e : v) e = rng.uniform(0.5, 1.0);
  double lambda = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double norm = 0.0;
    for (const double e : v) norm += e * e;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (auto& e : v) e /= norm;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto xi = x.row(i);
      double s = v[d - 1];
      for (std::size_t k = 0; k + 1 < d; ++k) s += xi[k] * v[k];
      xv[i] = s;
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto xi = x.row(i);
      for (std::size_t k = 0; k + 1 < d; ++k) next[k] += xi[k] * xv[i];
      next[d - 1] += xv[i];
    }
    double rayleigh = 0.0;
    for (std::size_t k = 0; k < d; ++k) rayleigh += v[k] * next[k];
    v.swap(next);
    if (std::abs(rayleigh - lambda) <= 1e-9 * std::max(1.0, rayleigh)) {
      lambda = rayleigh;
      break;
    }
    lambda = rayleigh;
  }
  return lambda;
}

void check_shapes(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) fail(ErrorKind::Dimension, "features and labels differ in row count");
  if (x.rows() == 0) fail(ErrorKind::Config, "no training rows for the linear baseline");
}

}  // namespace

Matrix LinearModel::scores(const Matrix& x) const {
  if (x.cols() != weights.rows()) {
    fail(ErrorKind::Dimension, "linear model expects " + std::to_string(weights.rows()) +
                                   " features, got " + std::to_string(x.cols()));
  }
  return affine(x, weights, bias);
}

Matrix LinearModel::predict(const Matrix& x) const {
  const Matrix z = scores(x);
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto zi = z.row(i);
    if (mode == LabelMode::SingleLabel) {
      if (zi.empty()) continue;
      const auto best = std::max_element(zi.begin(), zi.end()) - zi.begin();
      out(i, static_cast<std::size_t>(best)) = 1.0;
    } else {
      for (std::size_t j = 0; j < zi.size(); ++j) out(i, j) = sigmoid(zi[j]) >= 0.5 ? 1.0 : 0.0;
    }
  }
  return out;
}

void LinearModel::save(const std::filesystem::path& path) const {
  io::BinaryWriter w(path, kMagic, kVersion);
  w.u8(mode == LabelMode::SingleLabel ? 0 : 1);
  w.f64(penalty);
  w.matrix(weights);
  w.f64s(bias);
  w.close();
}

LinearModel LinearModel::load(const std::filesystem::path& path) {
  io::BinaryReader r(path, kMagic, kVersion);
  LinearModel m;
  m.mode = r.u8() == 0 ? LabelMode::SingleLabel : LabelMode::Multilabel;
  m.penalty = r.f64();
  m.weights = r.matrix();
  m.bias = r.f64s();
  r.expect_end();
  if (m.weights.cols() != m.bias.size()) fail(ErrorKind::Parse, path.string() + ": bad shapes");
  return m;
}

double logistic_objective(const Matrix& x, const Matrix& y, const Matrix& weights,
                          const std::vector<double>& bias, double penalty, Matrix* grad_weights,
                          std::vector<double>* grad_bias) {
  check_shapes(x, y);
  if (weights.rows() != x.cols() || weights.cols() != y.cols() || bias.size() != y.cols()) {
    fail(ErrorKind::Dimension, "logistic_objective: parameter shapes do not match the data");
  }
  const double n = static_cast<double>(x.rows());
  Matrix z = affine(x, weights, bias);
  double value = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < z.cols(); ++j) {
      const double zij = z(i, j);
      value += softplus(zij) - y(i, j) * zij;
      z(i, j) = (sigmoid(zij) - y(i, j)) / n;  // reused as dL/dz
    }
  }
  value /= n;
  double sq = 0.0;
  for (const double w : weights.data()) sq += w * w;
  value += penalty / (2.0 * n) * sq;

  if (grad_weights) {
    Matrix g(weights.rows(), weights.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto xi = x.row(i);
      const auto dz = z.row(i);
      for (std::size_t k = 0; k < xi.size(); ++k) {
        if (xi[k] == 0.0) continue;
        auto gk = g.row(k);
        for (std::size_t j = 0; j < dz.size(); ++j) gk[j] += xi[k] * dz[j];
      }
    }
    const auto w = weights.data();
    auto gd = g.data();
    for (std::size_t k = 0; k < gd.size(); ++k) gd[k] += penalty / n * w[k];
    *grad_weights = std::move(g);
  }
  if (grad_bias) {
    grad_bias->assign(y.cols(), 0.0);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) (*grad_bias)[j] += z(i, j);
  }
  return value;
}

LinearModel train_logistic(const Matrix& x, const Matrix& y, LabelMode mode, double penalty,
                           const LinearConfig& config) {
  check_shapes(x, y);
  if (penalty < 0.0) fail(ErrorKind::Config, "penalty must be >= 0");
  const double n = static_cast<double>(x.rows());
  const double lipschitz = gram_spectral_norm(x) / (4.0 * n) + penalty / n;

  LinearModel model;
  model.mode = mode;
  model.penalty = penalty;
  model.weights = Matrix(x.cols(), y.cols());
  model.bias.assign(y.cols(), 0.0);
  if (lipschitz <= 0.0) return model;
  const double step = 1.0 / lipschitz;

  Matrix w_prev = model.weights;
  std::vector<double> b_prev = model.bias;
  Matrix w_look = model.weights;
  std::vector<double> b_look = model.bias;
  Matrix gw;
  std::vector<double> gb;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    logistic_objective(x, y, w_look, b_look, penalty, &gw, &gb);
    double gmax = 0.0;
    for (const double g : gw.data()) gmax = std::max(gmax, std::abs(g));
    for (const double g : gb) gmax = std::max(gmax, std::abs(g));

    auto wl = w_look.data();
    auto wm = model.weights.data();
    const auto gwd = gw.data();
    for (std::size_t k = 0; k < wm.size(); ++k) wm[k] = wl[k] - step * gwd[k];
    for (std::size_t j = 0; j < gb.size(); ++j) model.bias[j] = b_look[j] - step * gb[j];
    if (gmax < config.tolerance) break;

    const double momentum = static_cast<double>(it - 1) / static_cast<double>(it + 2);
    const auto wp = w_prev.data();
    for (std::size_t k = 0; k < wm.size(); ++k) wl[k] = wm[k] + momentum * (wm[k] - wp[k]);
    for (std::size_t j = 0; j < gb.size(); ++j)
      b_look[j] = model.bias[j] + momentum * (model.bias[j] - b_prev[j]);
    w_prev = model.weights;
    b_prev = model.bias;
  }
  if (!model.weights.all_finite()) fail(ErrorKind::Numeric, "linear baseline diverged");
  return model;
}

LinearSelection train_linear_baseline(const Matrix& train_x, const Matrix& train_y,
                                      const Matrix& val_x, const Matrix& val_y, LabelMode mode,
                                      const LinearConfig& config) {
  if (config.penalties.empty()) fail(ErrorKind::Config, "empty penalty grid");
  LinearSelection best;
  best.validation_macro_f1 = -1.0;
  for (const double penalty : config.penalties) {
    LinearModel model = train_logistic(train_x, train_y, mode, penalty, config);
    const double score =
        val_x.rows() == 0 ? 0.0 : f1_scores(val_y, model.predict(val_x)).macro;
    best.grid_scores.push_back(score);
    if (score > best.validation_macro_f1) {
      best.validation_macro_f1 = score;
      best.model = std::move(model);
    }
  }
  return best;
}

}  // namespace wce
