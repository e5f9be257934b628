// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//
//   wce_acceptance --cli <path to wce executable> [--only N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "wce/classifier.hpp"
#include "wce/embeddings.hpp"
#include "wce/eval.hpp"
#include "wce/experiment.hpp"
#include "wce/oov.hpp"
#include "wce/synthetic.hpp"
#include "wce/weighting.hpp"
#include "wce/word_class.hpp"

using namespace wce;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, a);
  return buf;
}

// Random term counts and labels for one instance; every class gets at least one document.
struct Instance {
  oracle::Dense counts;
  oracle::Dense labels;
};

Instance random_instance(oracle::Random& rng, std::size_t n, std::size_t v, std::size_t m, bool multilabel) {
  Instance in{oracle::random_counts(rng, n, v, 0.05 + 0.2 * rng.uniform()),
              oracle::random_labels(rng, n, m, multilabel)};
  if (!multilabel)
    for (std::size_t c = 0; c < m && c < n; ++c) {
      in.labels[c].assign(m, 0.0);
      in.labels[c][c] = 1.0;
    }
  return in;
}

// ---------------------------------------------------------------------------

Outcome standardization_suite() {
  const auto start = std::chrono::steady_clock::now();
  oracle::Random rng(101);
  const Measure measures[] = {Measure::Dot, Measure::Ppmi, Measure::InfoGain, Measure::Chi2};
  double worst_mean = 0, worst_std = 0;
  std::size_t constant = 0, columns = 0;
  bool ok = true;
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 10 + rng.below(91), v = 5 + rng.below(196), m = 2 + rng.below(19);
    const auto in = random_instance(rng, n, v, m, k % 3 == 0);
    WceConfig cfg;
    cfg.measure = measures[k % 4];
    const auto x = tfidf(oracle::sparse(in.counts));
    const auto w = compute_wce(x, oracle::sparse(in.labels), cfg);
    // oracle correlations decide which columns are constant
    const auto xd = oracle::to_nested(x);
    const auto a = cfg.measure == Measure::Dot
                       ? oracle::dot(oracle::l1_columns(xd), in.labels)
                       : oracle::contingency_measure(
                             in.counts, in.labels,
                             cfg.measure == Measure::Ppmi ? oracle::Measure::Ppmi
                             : cfg.measure == Measure::InfoGain ? oracle::Measure::Ig
                                                                : oracle::Measure::Chi2);
    for (std::size_t j = 0; j < m; ++j) {
      ++columns;
      double lo = a[0][j], hi = a[0][j];
      for (std::size_t t = 0; t < v; ++t) lo = std::min(lo, a[t][j]), hi = std::max(hi, a[t][j]);
      if (hi - lo < 1e-12) {
        ++constant;
        for (std::size_t t = 0; t < v; ++t) ok = ok && w.values(t, j) == 0.0;
        continue;
      }
      double mean = 0;
      for (std::size_t t = 0; t < v; ++t) mean += w.values(t, j);
      mean /= static_cast<double>(v);
      double ss = 0;
      for (std::size_t t = 0; t < v; ++t) ss += (w.values(t, j) - mean) * (w.values(t, j) - mean);
      const double sd = std::sqrt(ss / static_cast<double>(v - 1));
      worst_mean = std::max(worst_mean, std::abs(mean));
      worst_std = std::max(worst_std, std::abs(sd - 1.0));
    }
  }
  const double t = seconds_since(start);
  ok = ok && worst_mean < 1e-9 && worst_std < 1e-9 && t < 5.0;
  return {ok, std::to_string(columns) + " columns (" + std::to_string(constant) + " constant), max |mean| " +
                  fmt("%.2e", worst_mean) + ", max |std-1| " + fmt("%.2e", worst_std) + ", " +
                  fmt("%.2f s", t)};
}

Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  oracle::Random rng(202);
  std::map<std::string, double> worst = {{"dot", 0}, {"ppmi", 0}, {"ig", 0}, {"chi2", 0}, {"tfidf", 0}, {"project", 0}};
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 5 + rng.below(46), v = 3 + rng.below(38), m = 2 + rng.below(7), d = 1 + rng.below(12);
    const auto in = random_instance(rng, n, v, m, k % 2 == 1);
    const auto xs = oracle::sparse(in.counts);
    const auto ys = oracle::sparse(in.labels);
    const auto tf = oracle::tfidf(in.counts);
    worst["tfidf"] = std::max(worst["tfidf"], oracle::max_diff(tf, tfidf(xs)));
    worst["dot"] = std::max(worst["dot"], oracle::max_diff(oracle::dot(oracle::l1_columns(tf), in.labels),
                                                           correlate_dot(l1_normalize_columns(tfidf(xs)), ys)));
    const auto xb = binarize(xs);
    worst["ppmi"] = std::max(worst["ppmi"], oracle::max_diff(oracle::contingency_measure(in.counts, in.labels, oracle::Measure::Ppmi), correlate_ppmi(xb, ys)));
    worst["ig"] = std::max(worst["ig"], oracle::max_diff(oracle::contingency_measure(in.counts, in.labels, oracle::Measure::Ig), correlate_ig(xb, ys)));
    worst["chi2"] = std::max(worst["chi2"], oracle::max_diff(oracle::contingency_measure(in.counts, in.labels, oracle::Measure::Chi2), correlate_chi2(xb, ys)));

    EmbeddingMatrix e;
    e.q = d;
    e.values = Matrix(v, d);
    for (auto& x : e.values.data()) x = rng.normal();
    e.training_rows = v;
    oracle::Dense expected = oracle::zeros(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < v; ++t)
        for (std::size_t j = 0; j < d; ++j) expected[i][j] += tf[i][t] * e.values(t, j);
    worst["project"] = std::max(worst["project"], oracle::max_diff(expected, project_documents(tfidf(xs), e)));
  }
  const double t = seconds_since(start);
  bool ok = t < 10.0;
  std::string detail;
  for (const auto& [name, err] : worst) {
    ok = ok && err < 1e-10;
    detail += name + " " + fmt("%.1e", err) + ", ";
  }
  return {ok, detail + fmt("%.2f s", t)};
}

Outcome scale_invariance() {
  oracle::Random rng(303);
  double worst = 0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t v = 20 + rng.below(181), m = 2 + rng.below(19);
    Matrix a(v, m);
    for (auto& x : a.data()) x = rng.uniform() < 0.3 ? 0.0 : std::abs(rng.normal());
    const auto base = standardize_columns(a).values;
    for (std::size_t j = 0; j < m; ++j) {
      for (const double factor : {0.1, 3.0, 1000.0}) {
        Matrix scaled = a;
        for (std::size_t t = 0; t < v; ++t) scaled(t, j) *= factor;
        worst = std::max(worst, max_abs_diff(base, standardize_columns(scaled).values));
      }
    }
  }
  return {worst < 1e-12, "max entry change " + fmt("%.2e", worst)};
}

Outcome pca_criterion() {
  oracle::Random rng(404);
  double worst_var = 0, worst_orth = 0;
  for (int k = 0; k < 5; ++k) {
    oracle::Dense d = oracle::zeros(200, 50);
    std::vector<std::vector<double>> factors(5, std::vector<double>(50));
    for (auto& f : factors)
      for (auto& x : f) x = rng.normal();
    for (auto& row : d) {
      for (const auto& f : factors) {
        const double z = rng.normal();
        for (std::size_t j = 0; j < 50; ++j) row[j] += z * f[j];
      }
      for (auto& x : row) x += 0.5 * rng.normal();
    }
    const auto s = oracle::standardize(d);
    const auto [values, vectors] = oracle::jacobi_eigen(oracle::covariance(s));
    const std::size_t r = k == 0 ? 50 : 10 + 5 * static_cast<std::size_t>(k);
    const auto pca = pca_reduce(oracle::to_matrix(s), r);
    for (std::size_t i = 0; i < r; ++i) worst_var = std::max(worst_var, std::abs(pca.explained_variance[i] - values[i]));
    const auto vtv = matmul(pca.components.transposed(), pca.components);
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = 0; b < r; ++b) worst_orth = std::max(worst_orth, std::abs(vtv(a, b) - (a == b ? 1.0 : 0.0)));
  }

  // threshold: reduction happens exactly when m > max_dims (300)
  const auto threshold = [&](std::size_t m) {
    const std::size_t n = 4 * m, v = 400;
    oracle::Dense counts = oracle::random_counts(rng, n, v, 0.05);
    oracle::Dense labels = oracle::zeros(n, m);
    for (std::size_t i = 0; i < n; ++i) labels[i][i % m] = 1.0;
    const auto w = compute_wce(tfidf(oracle::sparse(counts)), oracle::sparse(labels), WceConfig{});
    return std::make_pair(w.reduced, w.dims());
  };
  const auto at = threshold(300);
  const auto above = threshold(301);
  const bool thresh_ok = !at.first && at.second == 300 && above.first && above.second == 300;
  return {worst_var < 1e-6 && worst_orth < 1e-8 && thresh_ok,
          "eigenvalue error " + fmt("%.2e", worst_var) + ", |V'V - I| " + fmt("%.2e", worst_orth) +
              ", m=300 reduced=" + (at.first ? "yes" : "no") + ", m=301 reduced=" + (above.first ? "yes" : "no")};
}

// Relative error per entry; entries where both values are exactly zero are skipped.
struct RelErr {
  double worst = 0;
  void add(double analytic, double numeric) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale == 0.0) return;
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
};

Outcome gradient_checks() {
  const double h = 1e-5;
  oracle::Random rng(505);
  RelErr clf, reg;
  for (int point = 0; point < 10; ++point) {
    const std::size_t rows = 8, q = 3, r = 4, m = 2 + point % 3;
    Model model;
    EmbeddingMatrix& e = model.embeddings;
    e.q = q;
    e.r = r;
    e.values = Matrix(rows, q + r);
    for (auto& x : e.values.data()) x = rng.normal();
    e.training_rows = rows;
    e.has_pretrained.assign(rows, 1);
    e.has_wce.assign(rows, 1);
    e.leading_trainable = e.trailing_trainable = true;
    model.weights = Matrix(q + r, m);
    for (auto& x : model.weights.data()) x = rng.normal();
    model.bias.assign(m, 0.0);
    for (auto& x : model.bias) x = 0.3 * rng.normal();
    model.mode = point % 2 ? LabelMode::Multilabel : LabelMode::SingleLabel;
    model.dropout = point < 5 ? 0.0 : 0.5;
    std::vector<Sequence> batch;
    Matrix y(5, m);
    for (std::size_t i = 0; i < 5; ++i) {
      Sequence s;
      for (std::size_t k = 0, len = 1 + rng.below(5); k < len; ++k) s.push_back(static_cast<std::uint32_t>(rng.below(rows)));
      batch.push_back(s);
      y(i, rng.below(m)) = 1;
      if (model.mode == LabelMode::Multilabel && rng.uniform() < 0.5) y(i, rng.below(m)) = 1;
    }
    const std::uint64_t seed = 1000 + point;
    Gradients g;
    Rng grng(seed);
    loss_and_gradients(model, batch, y, true, grng, g);
    const auto f = [&]() {
      Rng frng(seed);
      Gradients unused;
      return loss_and_gradients(model, batch, y, true, frng, unused);
    };
    const auto probe = [&](double& p, double analytic) {
      const double saved = p;
      p = saved + h;
      const double up = f();
      p = saved - h;
      const double down = f();
      p = saved;
      clf.add(analytic, (up - down) / (2 * h));
    };
    for (std::size_t k = 0; k < model.weights.size(); ++k) probe(model.weights.data()[k], g.weights.data()[k]);
    for (std::size_t k = 0; k < m; ++k) probe(model.bias[k], g.bias[k]);
    for (std::size_t k = 0; k < e.values.size(); ++k) probe(e.values.data()[k], g.embeddings.data()[k]);
  }
  for (int point = 0; point < 10; ++point) {
    const std::size_t q = 4, hidden = 6, r = 3, n = 7;
    auto net = zero_regressor(q, hidden, r);
    for (auto* w : {&net.w1, &net.w2})
      for (auto& x : w->data()) x = rng.normal();
    for (auto& x : net.b1) x = 0.3 * rng.normal();
    for (auto& x : net.b2) x = 0.3 * rng.normal();
    net.dropout = point < 5 ? 0.0 : 0.5;
    Matrix u(n, q), s(n, r);
    for (auto& x : u.data()) x = rng.normal();
    for (auto& x : s.data()) x = rng.normal();
    const std::uint64_t seed = 2000 + point;
    RegressorGradients g;
    Rng grng(seed);
    regressor_loss_and_gradients(net, u, s, true, grng, g);
    const auto f = [&]() {
      Rng frng(seed);
      RegressorGradients unused;
      return regressor_loss_and_gradients(net, u, s, true, frng, unused);
    };
    const auto probe = [&](double& p, double analytic) {
      const double saved = p;
      p = saved + h;
      const double up = f();
      p = saved - h;
      const double down = f();
      p = saved;
      reg.add(analytic, (up - down) / (2 * h));
    };
    for (std::size_t k = 0; k < net.w1.size(); ++k) probe(net.w1.data()[k], g.w1.data()[k]);
    for (std::size_t k = 0; k < hidden; ++k) probe(net.b1[k], g.b1[k]);
    for (std::size_t k = 0; k < net.w2.size(); ++k) probe(net.w2.data()[k], g.w2.data()[k]);
    for (std::size_t k = 0; k < r; ++k) probe(net.b2[k], g.b2[k]);
  }
  return {clf.worst < 1e-4 && reg.worst < 1e-4,
          "classifier max rel error " + fmt("%.2e", clf.worst) + ", regressor " + fmt("%.2e", reg.worst)};
}

Outcome dropout_criterion() {
  oracle::Random rng(606);
  const std::size_t q = 6, r = 10;
  std::vector<double> base(q + r);
  for (auto& x : base) x = rng.normal();

  bool identity = true;
  Rng drng(1);
  for (const double p : {0.0, 0.3, 0.5, 0.9}) {
    auto v = base;
    supervised_dropout(v, q, r, p, false, drng);
    identity = identity && std::memcmp(v.data(), base.data(), v.size() * sizeof(double)) == 0;
  }
  auto v0 = base;
  supervised_dropout(v0, q, r, 0.0, true, drng);
  identity = identity && std::memcmp(v0.data(), base.data(), v0.size() * sizeof(double)) == 0;

  const double p = 0.5;
  const double c = 1.0 - p * static_cast<double>(r) / static_cast<double>(q + r);
  const std::size_t masks = 20000;
  std::vector<double> mean(q + r, 0.0);
  bool fixed_ok = true;
  for (std::size_t t = 0; t < masks; ++t) {
    auto v = base;
    supervised_dropout(v, q, r, p, true, drng);
    for (std::size_t k = 0; k < q; ++k) fixed_ok = fixed_ok && std::abs(v[k] - base[k] / c) <= 1e-15 * std::abs(base[k] / c);
    for (std::size_t k = q; k < q + r; ++k) mean[k] += v[k];
  }
  double worst_z = 0;
  for (std::size_t k = q; k < q + r; ++k) {
    mean[k] /= static_cast<double>(masks);
    const double expected = (1 - p) * base[k] / c;
    const double se = std::abs(base[k]) / c * std::sqrt(p * (1 - p) / static_cast<double>(masks));
    worst_z = std::max(worst_z, std::abs(mean[k] - expected) / se);
  }
  return {identity && fixed_ok && worst_z < 3.0,
          std::string("identity ") + (identity ? "bitwise" : "broken") + ", " + std::to_string(masks) +
              " masks, max |z| " + fmt("%.2f", worst_z)};
}

Outcome headline_effect(const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = work / "headline";
  fs::create_directories(dir);
  SyntheticConfig sc;  // 5000 documents, 20 classes, 30% noise tokens, 100-dim vectors
  write_synthetic(make_synthetic(sc), dir);
  auto cfg = parse_experiment_config_text(
      "train = train.jsonl\ntest = test.jsonl\npretrained = pretrained.txt\n"
      "variants = pretrained, pretrained+wce\nbaseline = pretrained\n"
      "dropout = 0.5\nseeds = 0, 1, 2, 3, 4\n",
      dir);
  const auto res = run_experiment(cfg);
  const double t = seconds_since(start);
  const auto& base = res.aggregates.at(0);
  const auto& wce = res.aggregates.at(1);
  const auto& cmp = res.comparisons.at(0);
  const bool ok = wce.macro_mean > base.macro_mean && cmp.macro.p_value < 0.05 && t < 300.0;
  return {ok, "pretrained " + fmt("%.4f", base.macro_mean) + " vs pretrained+wce " + fmt("%.4f", wce.macro_mean) +
                  ", p = " + fmt("%.2e", cmp.macro.p_value) + ", " + fmt("%.1f s", t)};
}

struct Pipeline {
  LabeledCorpus corpus;
  EmbeddingMatrix embeddings;
};

Pipeline pipeline_for(const SyntheticCorpus& syn) {
  auto corpus = LabeledCorpus::build(syn.train, syn.test, CorpusOptions{});
  const auto w = corpus_wce(corpus, WceConfig{});
  EmbeddingOptions eo;
  eo.variant = Variant::PretrainedWce;
  auto e = build_embedding_matrix(corpus.vocabulary(), corpus.out_of_vocabulary_terms(), &syn.pretrained, &w, eo);
  return {std::move(corpus), std::move(e)};
}

TrainResult train_on(const Pipeline& p, const EmbeddingMatrix& e, double dropout, std::uint64_t seed) {
  ModelConfig mc;
  mc.mode = p.corpus.mode();
  mc.dropout = dropout;
  mc.seed = seed;
  return train(training_data(p.corpus, e), e, p.corpus.label_index().names(), mc);
}

Outcome regularization_effect() {
  SyntheticConfig sc;
  sc.spurious_per_class = 3;
  sc.spurious_rate = 0.5;
  const auto p = pipeline_for(make_synthetic(sc));
  double gap[2] = {0, 0};
  const double rates[2] = {0.0, 0.5};
  for (int k = 0; k < 2; ++k) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto tr = train_on(p, p.embeddings, rates[k], seed);
      gap[k] += (evaluate_model(tr.model, p.corpus, Split::Train).macro -
                 evaluate_model(tr.model, p.corpus, Split::Test).macro) / 3.0;
    }
  }
  return {gap[1] < gap[0], "mean gap p=0: " + fmt("%.4f", gap[0]) + ", p=0.5: " + fmt("%.4f", gap[1])};
}

Outcome computation_budget() {
  const std::size_t n = 10000, v = 20000, m = 20;
  oracle::Random rng(909);
  std::vector<Triplet> counts;
  std::vector<Triplet> labels;
  // Zipf-like term draws, 60 tokens per document
  std::vector<double> cdf(v);
  double total = 0;
  for (std::size_t t = 0; t < v; ++t) cdf[t] = total += 1.0 / static_cast<double>(t + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 60; ++k) {
      const double u = rng.uniform() * total;
      const auto t = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      counts.push_back({i, std::min(t, v - 1), 1.0});
    }
    labels.push_back({i, rng.below(m), 1.0});
  }
  const auto x = SparseMatrix::from_triplets(n, v, std::move(counts));
  const auto y = SparseMatrix::from_triplets(n, m, std::move(labels));

  const auto start = std::chrono::steady_clock::now();
  const auto weighted = tfidf(x);
  const double t_tfidf = seconds_since(start);
  const auto mid = std::chrono::steady_clock::now();
  const auto w = compute_wce(weighted, y, WceConfig{});
  const double t_wce = seconds_since(mid);
  const double t_total = seconds_since(start);
  const bool ok = t_wce < 1.0 && t_total < 10.0 && w.rows() == v && w.dims() == m;
  return {ok, "A+S " + fmt("%.3f s", t_wce) + ", tfidf " + fmt("%.3f s", t_tfidf) + ", total " +
                  fmt("%.3f s", t_total) + " (nnz " + std::to_string(x.nnz()) + ")"};
}

Outcome f1_conventions() {
  struct Fixture {
    Matrix truth, pred;
    std::vector<double> per_class;
    double macro, micro;
  };
  const std::vector<Fixture> fixtures = {
      // perfect single-label
      {{{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}, {1.0, 1.0}, 1.0, 1.0},
      // all wrong
      {{{1, 0}, {0, 1}}, {{0, 1}, {1, 0}}, {0.0, 0.0}, 0.0, 0.0},
      // class never present and never predicted: F1 = 1
      {{{1, 0, 0}, {0, 1, 0}}, {{1, 0, 0}, {0, 1, 0}}, {1.0, 1.0, 1.0}, 1.0, 1.0},
      // class never present but predicted once
      {{{1, 0, 0}, {0, 1, 0}}, {{0, 0, 1}, {0, 1, 0}}, {0.0, 1.0, 0.0}, 1.0 / 3.0, 0.5},
      // tp2 fp1 fn0 | tp1 fp0 fn1
      {{{1, 0}, {0, 1}, {1, 0}, {0, 1}}, {{1, 0}, {1, 0}, {1, 0}, {0, 1}}, {0.8, 2.0 / 3.0}, (0.8 + 2.0 / 3.0) / 2, 0.75},
      // multilabel: tp3 fp1 fn1 pooled
      {{{1, 1, 0}, {0, 1, 1}}, {{1, 0, 0}, {1, 1, 1}}, {2.0 / 3.0, 2.0 / 3.0, 1.0}, (2.0 / 3.0 + 2.0 / 3.0 + 1.0) / 3, 0.75},
      // nothing predicted at all (multilabel)
      {{{1, 0}, {1, 1}}, {{0, 0}, {0, 0}}, {0.0, 0.0}, 0.0, 0.0},
      // empty truth and empty predictions everywhere
      {{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}, {1.0, 1.0}, 1.0, 1.0},
      // over-prediction: tp2 fp0 fn0 | tp1 fp1 fn0
      {{{1, 0}, {1, 1}}, {{1, 1}, {1, 1}}, {1.0, 2.0 / 3.0}, (1.0 + 2.0 / 3.0) / 2, 6.0 / 7.0},
      // imbalanced: class 0 tp3 fp1 fn0, class 1 tp0 fp0 fn1
      {{{1, 0}, {1, 0}, {1, 0}, {0, 1}}, {{1, 0}, {1, 0}, {1, 0}, {1, 0}}, {6.0 / 7.0, 0.0}, 3.0 / 7.0, 0.75},
  };
  std::size_t passed = 0;
  std::string mismatches;
  for (std::size_t k = 0; k < fixtures.size(); ++k) {
    const auto& f = fixtures[k];
    const auto s = f1_scores(f.truth, f.pred);
    if (s.per_class == f.per_class && s.macro == f.macro && s.micro == f.micro) ++passed;
    else mismatches += " #" + std::to_string(k + 1) + " macro " + fmt("%.17g", s.macro) + " micro " + fmt("%.17g", s.micro);
  }
  return {passed == fixtures.size(),
          std::to_string(passed) + "/" + std::to_string(fixtures.size()) + " fixtures exact" +
              (mismatches.empty() ? "" : ";" + mismatches)};
}

Outcome oov_parity() {
  SyntheticConfig sc;
  sc.oov_fraction = 0.1;
  const auto syn = make_synthetic(sc);
  const auto p = pipeline_for(syn);
  const auto fitted = train_regressor(p.embeddings, RegressorConfig{});
  const auto imputed = impute_oov(p.embeddings, fitted.regressor);
  std::size_t filled = 0;
  for (std::size_t i = 0; i < imputed.rows(); ++i) filled += imputed.has_wce[i] && !p.embeddings.has_wce[i];
  double worst = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const double zero = evaluate_model(train_on(p, p.embeddings, 0.5, seed).model, p.corpus, Split::Test).macro;
    const double imp = evaluate_model(train_on(p, imputed, 0.5, seed).model, p.corpus, Split::Test).macro;
    worst = std::max(worst, std::abs(imp - zero));
    detail += fmt("%.4f", zero) + "/" + fmt("%.4f", imp) + " ";
  }
  return {filled > 0 && worst <= 0.02, std::to_string(filled) + " rows imputed; zero/imputed macro-F1 " + detail +
                                           "max |diff| " + fmt("%.4f", worst)};
}

std::vector<std::string> read_all_files(const fs::path& root, std::map<std::string, std::string>& out) {
  std::vector<std::string> names;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    const auto rel = fs::relative(entry.path(), root).string();
    out[rel] = std::string(std::istreambuf_iterator<char>(in), {});
    names.push_back(rel);
  }
  return names;
}

Outcome cli_determinism(const fs::path& work, const std::string& cli) {
  if (cli.empty()) return {false, "no --cli path given"};
  const auto run = [&](const fs::path& d) {
    fs::create_directories(d);
    {
      std::ofstream cfg(d / "exp.conf");
      cfg << "train = syn/train.jsonl\ntest = syn/test.jsonl\npretrained = syn/pretrained.txt\n"
             "variants = random, pretrained+wce\nbaseline = random\nseeds = 0, 1\nmin_df = 2\n"
             "max_epochs = 5\nrandom_dims = 10, 20\n";
    }
    const std::string D = "'" + d.string() + "'";
    const std::string W = "'" + cli + "' --seed 7 ";
    const std::vector<std::string> commands = {
        W + "make-synthetic --out " + D + "/syn --documents 800 --classes 4 --pretrained-dim 20 --oov-fraction 0.1",
        W + "build-corpus --train " + D + "/syn/train.jsonl --test " + D + "/syn/test.jsonl --min-df 2 --out " + D + "/corpus",
        W + "compute --corpus " + D + "/corpus --out " + D + "/S.bin --text " + D + "/S.txt",
        W + "compute --corpus " + D + "/corpus --measure chi2 --max-dims 3 --out " + D + "/S3.bin",
        W + "build-embeddings --corpus " + D + "/corpus --pretrained " + D + "/syn/pretrained.txt --wce " + D +
            "/S.bin --out " + D + "/E.bin --text " + D + "/E.txt",
        W + "train --corpus " + D + "/corpus --embeddings " + D + "/E.bin --dropout 0.5 --max-epochs 8 --out " + D + "/model.bin",
        W + "evaluate --model " + D + "/model.bin --corpus " + D + "/corpus --split test --out " + D + "/eval.json",
        W + "evaluate --model " + D + "/model.bin --corpus " + D + "/corpus --split validation > " + D + "/eval_stdout.json",
        W + "oov-train --embeddings " + D + "/E.bin --max-epochs 30 --out " + D + "/reg.bin --log " + D + "/reg.json",
        W + "oov-impute --embeddings " + D + "/E.bin --regressor " + D + "/reg.bin --out " + D + "/E_imputed.bin",
        W + "oov-inspect --regressor " + D + "/reg.bin --embeddings " + D + "/syn/pretrained.txt --top 10 --out " + D + "/inspect.tsv",
        W + "export-projector --embeddings " + D + "/E.bin --corpus " + D + "/corpus --budget 100 --out " + D + "/projector",
        W + "run-experiment --config " + D + "/exp.conf --out " + D + "/experiment",
    };
    for (const auto& c : commands) {
      if (std::system((c + " 2>/dev/null").c_str()) != 0) return c;
    }
    return std::string();
  };
  const fs::path a = work / "cli_a", b = work / "cli_b";
  fs::remove_all(a);
  fs::remove_all(b);
  if (const auto failed = run(a); !failed.empty()) return {false, "command failed: " + failed};
  if (const auto failed = run(b); !failed.empty()) return {false, "command failed: " + failed};
  std::map<std::string, std::string> fa, fb;
  const auto na = read_all_files(a, fa);
  read_all_files(b, fb);
  if (fa.size() != fb.size()) return {false, "different file sets"};
  std::size_t same = 0;
  std::string differing;
  for (const auto& [name, bytes] : fa) {
    const auto it = fb.find(name);
    if (it != fb.end() && it->second == bytes) ++same;
    else differing += name + " ";
  }
  return {same == fa.size(), std::to_string(same) + "/" + std::to_string(fa.size()) + " files byte-identical" +
                                 (differing.empty() ? "" : "; differ: " + differing)};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--cli") == 0 && i + 1 < argc) cli = argv[++i];
    else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  const fs::path work = oracle::temp_dir("acceptance");

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"standardization suite", standardization_suite},
      {"oracle equivalence", oracle_equivalence},
      {"scale invariance", scale_invariance},
      {"PCA", pca_criterion},
      {"gradient checks", gradient_checks},
      {"supervised dropout", dropout_criterion},
      {"word-class embeddings beat pretrained alone", [&] { return headline_effect(work); }},
      {"supervised dropout narrows the generalization gap", regularization_effect},
      {"word-class computation budget", computation_budget},
      {"F1 conventions", f1_conventions},
      {"OOV imputation parity", oov_parity},
      {"CLI determinism", [&] { return cli_determinism(work, cli); }},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only && static_cast<int>(k + 1) != only) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
