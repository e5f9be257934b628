#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "wce/eval.hpp"
#include "wce/linear.hpp"

using namespace wce;

namespace {

void separable(oracle::Random& rng, std::size_t n, Matrix& x, Matrix& y) {
  x = Matrix(n, 3);
  y = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % 2;
    x(i, 0) = (c ? 1.0 : -1.0) + 0.3 * rng.normal();
    x(i, 1) = rng.normal();
    x(i, 2) = rng.normal();
    y(i, c) = 1;
  }
}

}  // namespace

TEST_SUITE("linear") {
  TEST_CASE("objective gradient matches central differences") {
    oracle::Random rng(4);
    Matrix x(7, 3), w(3, 2), y(7, 2);
    for (auto& v : x.data()) v = rng.normal();
    for (auto& v : w.data()) v = rng.normal();
    for (std::size_t i = 0; i < 7; ++i) y(i, rng.below(2)) = 1;
    std::vector<double> b = {0.2, -0.4};
    Matrix gw;
    std::vector<double> gb;
    logistic_objective(x, y, w, b, 0.7, &gw, &gb);
    const double h = 1e-6;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double saved = w.data()[k];
      w.data()[k] = saved + h;
      const double up = logistic_objective(x, y, w, b, 0.7);
      w.data()[k] = saved - h;
      const double down = logistic_objective(x, y, w, b, 0.7);
      w.data()[k] = saved;
      CHECK(gw.data()[k] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
    }
    for (std::size_t k = 0; k < 2; ++k) {
      const double saved = b[k];
      b[k] = saved + h;
      const double up = logistic_objective(x, y, w, b, 0.7);
      b[k] = saved - h;
      const double down = logistic_objective(x, y, w, b, 0.7);
      b[k] = saved;
      CHECK(gb[k] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
    }
  }

  TEST_CASE("zero parameters give 2 ln 2 per document over two classes") {
    const Matrix x{{1, 2}, {3, 4}};
    const Matrix y{{1, 0}, {0, 1}};
    const double f = logistic_objective(x, y, Matrix(2, 2), {0, 0}, 5.0);
    CHECK(f == doctest::Approx(2 * std::log(2.0)));
  }

  TEST_CASE("separable data is classified perfectly") {
    oracle::Random rng(9);
    Matrix x, y, vx, vy;
    separable(rng, 200, x, y);
    separable(rng, 60, vx, vy);
    const auto sel = train_linear_baseline(x, y, vx, vy, LabelMode::SingleLabel);
    CHECK(sel.grid_scores.size() == 7);
    CHECK(sel.validation_macro_f1 >= 0.95);
    CHECK(f1_scores(vy, sel.model.predict(vx)).macro == doctest::Approx(sel.validation_macro_f1));
    CHECK(sel.model.weights(0, 1) > 0);
    CHECK(sel.model.weights(0, 0) < 0);
  }

  TEST_CASE("identical features get identical weights") {
    oracle::Random rng(10);
    Matrix x(50, 2), y(50, 2);
    for (std::size_t i = 0; i < 50; ++i) {
      const double z = rng.normal();
      x(i, 0) = x(i, 1) = z;
      y(i, z + 0.5 * rng.normal() > 0 ? 1 : 0) = 1;
    }
    const auto model = train_logistic(x, y, LabelMode::SingleLabel, 1.0);
    for (std::size_t c = 0; c < 2; ++c) CHECK(model.weights(0, c) == doctest::Approx(model.weights(1, c)));
  }

  TEST_CASE("larger penalty shrinks the weights") {
    oracle::Random rng(11);
    Matrix x, y;
    separable(rng, 100, x, y);
    const auto loose = train_logistic(x, y, LabelMode::SingleLabel, 1e-2);
    const auto tight = train_logistic(x, y, LabelMode::SingleLabel, 1e2);
    double a = 0, b = 0;
    for (const double w : loose.weights.data()) a += w * w;
    for (const double w : tight.weights.data()) b += w * w;
    CHECK(b < a);
  }

  TEST_CASE("save and load") {
    oracle::Random rng(12);
    Matrix x, y;
    separable(rng, 40, x, y);
    const auto model = train_logistic(x, y, LabelMode::Multilabel, 0.5);
    const auto path = oracle::temp_dir("linear_io") / "l.bin";
    model.save(path);
    const auto back = LinearModel::load(path);
    CHECK(back.weights == model.weights);
    CHECK(back.bias == model.bias);
    CHECK(back.mode == LabelMode::Multilabel);
    CHECK(back.penalty == 0.5);
  }
}
