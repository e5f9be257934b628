#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "wce/classifier.hpp"
#include "wce/error.hpp"
#include "wce/eval.hpp"

using namespace wce;

namespace {

EmbeddingMatrix make_embedding(const Matrix& values, std::size_t q, std::size_t r) {
  EmbeddingMatrix e;
  e.values = values;
  e.q = q;
  e.r = r;
  e.variant = q && r ? Variant::PretrainedWce : (q ? Variant::Pretrained : Variant::Wce);
  e.leading_kind = q ? SpanKind::Pretrained : SpanKind::None;
  e.trailing_kind = r ? SpanKind::Supervised : SpanKind::None;
  e.training_rows = values.rows();
  for (std::size_t i = 0; i < values.rows(); ++i) e.terms.push_back("t" + std::to_string(i));
  e.has_pretrained.assign(values.rows(), q ? 1 : 0);
  e.has_wce.assign(values.rows(), r ? 1 : 0);
  e.rebuild_index();
  return e;
}

Model small_model(LabelMode mode, std::uint64_t seed) {
  oracle::Random rng(seed);
  const std::size_t rows = 6, q = 2, r = 3, m = 3;
  Matrix values(rows, q + r);
  for (auto& x : values.data()) x = rng.normal();
  Model model;
  model.embeddings = make_embedding(values, q, r);
  model.embeddings.leading_trainable = true;
  model.embeddings.trailing_trainable = true;
  model.weights = Matrix(q + r, m);
  for (auto& x : model.weights.data()) x = rng.normal() * 0.5;
  model.bias = {0.1, -0.2, 0.05};
  model.mode = mode;
  model.class_names = {"a", "b", "c"};
  return model;
}

}  // namespace

TEST_SUITE("classifier") {
  TEST_CASE("zero weights give uniform probabilities") {
    Model model;
    model.embeddings = make_embedding(Matrix{{1, 2}, {3, 4}}, 2, 0);
    model.weights = Matrix(2, 2);
    model.bias = {0, 0};
    Rng rng(0);
    const std::vector<Sequence> batch = {{0, 1}, {1}};
    const auto p = forward(model, batch, false, rng);
    CHECK(p(0, 0) == doctest::Approx(0.5));
    CHECK(p(1, 1) == doctest::Approx(0.5));
    const Matrix y{{1, 0}, {0, 1}};
    CHECK(loss(p, y, LabelMode::SingleLabel) == doctest::Approx(std::log(2.0)));

    model.weights = Matrix(2, 4);
    model.bias.assign(4, 0.0);
    const auto p4 = forward(model, batch, false, rng);
    const Matrix y4{{1, 0, 0, 0}, {0, 0, 0, 1}};
    CHECK(loss(p4, y4, LabelMode::SingleLabel) == doctest::Approx(std::log(4.0)));
  }

  TEST_CASE("hand-computed forward pass") {
    Model model;
    model.embeddings = make_embedding(Matrix{{1, 0}, {0, 1}}, 2, 0);
    model.weights = Matrix{{1, 0}, {0, 2}};
    model.bias = {0, 0.5};
    Rng rng(0);
    // mean of rows 0 and 1 plus an unknown token (zero vector, counted)
    const std::vector<Sequence> batch = {{0, 1, 7}};
    const auto p = forward(model, batch, false, rng);
    const double z0 = 1.0 / 3.0, z1 = 2.0 / 3.0 + 0.5;
    const double p0 = std::exp(z0) / (std::exp(z0) + std::exp(z1));
    CHECK(p(0, 0) == doctest::Approx(p0).epsilon(1e-12));

    model.mode = LabelMode::Multilabel;
    const auto s = forward(model, batch, false, rng);
    CHECK(s(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-z1))));

    // truncation to max_length and empty documents
    model.mode = LabelMode::SingleLabel;
    model.max_length = 1;
    const std::vector<Sequence> more = {{1, 0, 0}, {}};
    const auto t = forward(model, more, false, rng);
    const double e0 = std::exp(0.0), e1 = std::exp(2.5);
    CHECK(t(0, 1) == doctest::Approx(e1 / (e0 + e1)));
    const double b0 = std::exp(0.0), b1 = std::exp(0.5);
    CHECK(t(1, 1) == doctest::Approx(b1 / (b0 + b1)));
  }

  TEST_CASE("gradients match central differences") {
    for (const auto mode : {LabelMode::SingleLabel, LabelMode::Multilabel}) {
      for (const double p : {0.0, 0.5}) {
        auto model = small_model(mode, 17);
        model.dropout = p;
        const std::vector<Sequence> batch = {{0, 1, 2}, {3, 4}, {5, 0, 9}, {2}};
        const Matrix y = mode == LabelMode::SingleLabel
                             ? Matrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 0}}
                             : Matrix{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}};
        const std::uint64_t seed = 99;
        const auto objective = [&](const Model& m) {
          Rng rng(seed);
          Gradients unused;
          return loss_and_gradients(m, batch, y, true, rng, unused);
        };
        Gradients g;
        Rng rng(seed);
        loss_and_gradients(model, batch, y, true, rng, g);
        const double h = 1e-5;
        double worst = 0;
        const auto probe = [&](double& param, double analytic) {
          const double saved = param;
          param = saved + h;
          const double up = objective(model);
          param = saved - h;
          const double down = objective(model);
          param = saved;
          worst = std::max(worst, std::abs((up - down) / (2 * h) - analytic));
        };
        for (std::size_t k = 0; k < model.weights.size(); ++k)
          probe(model.weights.data()[k], g.weights.data()[k]);
        for (std::size_t k = 0; k < model.bias.size(); ++k) probe(model.bias[k], g.bias[k]);
        REQUIRE(g.embeddings.rows() == model.embeddings.rows());
        for (std::size_t k = 0; k < model.embeddings.values.size(); ++k)
          probe(model.embeddings.values.data()[k], g.embeddings.data()[k]);
        CHECK(worst < 1e-7);
      }
    }
  }

  TEST_CASE("static spans receive no gradient") {
    auto model = small_model(LabelMode::SingleLabel, 5);
    model.embeddings.leading_trainable = false;
    model.embeddings.has_wce[1] = 0;
    for (std::size_t k = 2; k < 5; ++k) model.embeddings.values(1, k) = 0.0;
    const std::vector<Sequence> batch = {{0, 1}, {1, 2}};
    const Matrix y{{1, 0, 0}, {0, 0, 1}};
    Rng rng(1);
    Gradients g;
    loss_and_gradients(model, batch, y, false, rng, g);
    for (std::size_t i = 0; i < model.embeddings.rows(); ++i) {
      CHECK(g.embeddings(i, 0) == 0.0);
      CHECK(g.embeddings(i, 1) == 0.0);
    }
    for (std::size_t k = 2; k < 5; ++k) CHECK(g.embeddings(1, k) == 0.0);
    CHECK(g.embeddings(0, 2) != 0.0);
  }

  TEST_CASE("supervised dropout identities") {
    Rng rng(3);
    std::vector<double> v = {1, 2, 3, 4};
    supervised_dropout(v, 2, 2, 0.0, true, rng);
    CHECK(v == std::vector<double>{1, 2, 3, 4});
    supervised_dropout(v, 2, 2, 0.7, false, rng);
    CHECK(v == std::vector<double>{1, 2, 3, 4});
    CHECK_THROWS_AS(supervised_dropout(v, 2, 2, 1.0, true, rng), Error);
    CHECK_THROWS_AS(supervised_dropout(v, 1, 2, 0.5, true, rng), Error);
  }

  TEST_CASE("supervised dropout rescales by 4/3 when q equals r at p = 0.5") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> v = {1, 1, 1, 1};
      std::vector<std::uint8_t> mask(2);
      supervised_dropout(v, 2, 2, 0.5, true, rng, mask);
      CHECK(v[0] == doctest::Approx(4.0 / 3.0));
      CHECK(v[1] == doctest::Approx(4.0 / 3.0));
      for (int k = 0; k < 2; ++k) CHECK(v[2 + k] == doctest::Approx(mask[k] ? 4.0 / 3.0 : 0.0));
    }
  }

  TEST_CASE("supervised dropout expectation") {
    const std::size_t q = 3, r = 5;
    const double p = 0.4;
    const double c = 1.0 - p * r / (q + r);
    const std::vector<double> base = {1, -2, 0.5, 3, -1, 2, 0.25, 4};
    std::vector<double> mean(q + r, 0.0);
    const int trials = 200000;
    Rng rng(8);
    bool leading_exact = true;
    for (int t = 0; t < trials; ++t) {
      auto v = base;
      supervised_dropout(v, q, r, p, true, rng);
      for (std::size_t k = 0; k < q; ++k) leading_exact = leading_exact && std::abs(v[k] - base[k] / c) <= 1e-15 * std::abs(base[k] / c);
      for (std::size_t k = q; k < q + r; ++k) mean[k] += v[k] / trials;
    }
    CHECK(leading_exact);
    for (std::size_t k = q; k < q + r; ++k)
      CHECK(mean[k] == doctest::Approx((1 - p) * base[k] / c).epsilon(0.02));
  }

  TEST_CASE("prediction rules") {
    const Matrix probs{{0.4, 0.4, 0.2}, {0.1, 0.2, 0.7}};
    const auto single = predict_labels(probs, LabelMode::SingleLabel);
    CHECK(single == Matrix{{1, 0, 0}, {0, 0, 1}});
    const Matrix mp{{0.5, 0.49, 0.9}};
    CHECK(predict_labels(mp, LabelMode::Multilabel) == Matrix{{1, 0, 1}});
  }

  TEST_CASE("linearly separable two-class corpus with word-class embeddings") {
    // terms 0-4 point to class 0, terms 5-9 to class 1
    Matrix values(10, 2);
    for (std::size_t t = 0; t < 10; ++t) {
      values(t, 0) = t < 5 ? 1.0 : -1.0;
      values(t, 1) = -values(t, 0);
    }
    const auto e = make_embedding(values, 0, 2);
    Rng rng(12);
    TrainingData data;
    const auto make = [&](std::size_t n, std::vector<Sequence>& docs, Matrix& y) {
      y = Matrix(n, 2);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % 2;
        Sequence s;
        for (int k = 0; k < 6; ++k) s.push_back(static_cast<std::uint32_t>(c * 5 + rng.below(5)));
        docs.push_back(s);
        y(i, c) = 1;
      }
    };
    make(200, data.train, data.train_labels);
    make(50, data.validation, data.validation_labels);
    ModelConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 20;
    cfg.max_epochs = 50;
    cfg.patience = 5;
    const auto result = train(data, e, {"neg", "pos"}, cfg);
    CHECK(result.best_val_macro_f1 == doctest::Approx(1.0));
    const auto pred = predict_labels(predict_proba(result.model, data.validation), LabelMode::SingleLabel);
    CHECK(f1_scores(data.validation_labels, pred).macro == doctest::Approx(1.0));
    REQUIRE_FALSE(result.log.empty());
    CHECK(result.log.back().phase == "validation");
    CHECK(result.log.size() <= cfg.max_epochs + 1);

    // identical seed, identical model
    const auto again = train(data, e, {"neg", "pos"}, cfg);
    CHECK(again.model.weights == result.model.weights);
    CHECK(again.log.size() == result.log.size());
  }

  TEST_CASE("early stopping restores the best epoch") {
    auto model = small_model(LabelMode::SingleLabel, 9);
    TrainingData data;
    Rng rng(2);
    data.train_labels = Matrix(30, 3);
    data.validation_labels = Matrix(12, 3);
    for (std::size_t i = 0; i < 30; ++i) {
      data.train.push_back({static_cast<std::uint32_t>(rng.below(6))});
      data.train_labels(i, rng.below(3)) = 1;
    }
    for (std::size_t i = 0; i < 12; ++i) {
      data.validation.push_back({static_cast<std::uint32_t>(rng.below(6))});
      data.validation_labels(i, rng.below(3)) = 1;
    }
    ModelConfig cfg;
    cfg.max_epochs = 40;
    cfg.patience = 3;
    cfg.final_validation_epoch = false;
    const auto result = train(data, model.embeddings, model.class_names, cfg);
    REQUIRE(result.best_epoch >= 1);
    double best = -1;
    for (const auto& entry : result.log) best = std::max(best, entry.val_macro_f1);
    CHECK(result.best_val_macro_f1 == best);
    CHECK(result.log[result.best_epoch - 1].val_macro_f1 == best);
    CHECK(result.log.size() - result.best_epoch <= cfg.patience);
    const auto pred = predict_labels(predict_proba(result.model, data.validation), LabelMode::SingleLabel);
    CHECK(f1_scores(data.validation_labels, pred).macro == doctest::Approx(best));
  }

  TEST_CASE("json log line keys") {
    EpochLog entry;
    entry.epoch = 3;
    entry.train_loss = 0.5;
    const auto line = to_json_line(entry);
    CHECK(line.rfind("{\"epoch\":3,\"phase\":\"train\",\"tr_loss\":0.5", 0) == 0);
    CHECK(line.find("va_macro_f1") != std::string::npos);
  }

  TEST_CASE("model save and load") {
    const auto model = small_model(LabelMode::Multilabel, 1);
    const auto path = oracle::temp_dir("model_io") / "m.bin";
    model.save(path);
    const auto back = Model::load(path);
    CHECK(back.weights == model.weights);
    CHECK(back.bias == model.bias);
    CHECK(back.mode == LabelMode::Multilabel);
    CHECK(back.embeddings.values == model.embeddings.values);
    const std::vector<Sequence> docs = {{0, 3}, {5}};
    CHECK(predict_proba(back, docs) == predict_proba(model, docs));
  }
}
