#include "wce/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "wce/error.hpp"
#include "wce/linear.hpp"
#include "wce/weighting.hpp"

namespace wce {

using nlohmann::ordered_json;

WordClassMatrix corpus_wce(const LabeledCorpus& corpus, const WceConfig& config, WceTiming* timing) {
  const auto& train = corpus.encoded(Split::Train);
  WordClassMatrix s = compute_wce(tfidf(train.counts), train.labels, config, timing);
  s.terms = corpus.vocabulary().terms();
  if (!s.reduced) s.column_names = corpus.label_index().names();
  return s;
}

PretrainedEmbeddings load_pretrained_for(const LabeledCorpus& corpus,
                                         const std::filesystem::path& path) {
  std::unordered_set<std::string> keep(corpus.vocabulary().terms().begin(),
                                       corpus.vocabulary().terms().end());
  for (auto& t : corpus.out_of_vocabulary_terms()) keep.insert(std::move(t));
  return load_pretrained(path, &keep);
}

F1Scores evaluate_model(const Model& model, const LabeledCorpus& corpus, Split split) {
  const auto seqs = sequences_for(corpus.split(split), model.embeddings);
  const Matrix truth = dense_labels(corpus.encoded(split).labels);
  if (truth.cols() != model.classes()) {
    fail(ErrorKind::Dimension, "model has " + std::to_string(model.classes()) +
                                   " classes, corpus has " + std::to_string(truth.cols()));
  }
  return f1_scores(truth, predict_labels(predict_proba(model, seqs), model.mode));
}

VariantSpec parse_variant_spec(std::string_view text) {
  VariantSpec spec;
  spec.name = std::string(text);
  const auto colon = text.find(':');
  spec.variant = parse_variant(text.substr(0, colon));
  if (colon != std::string_view::npos) {
    const auto mode = text.substr(colon + 1);
    if (mode == "static") spec.trainable = false;
    else if (mode == "trainable") spec.trainable = true;
    else fail(ErrorKind::Config, "unknown variant suffix '" + std::string(mode) + "' (static|trainable)");
  }
  return spec;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split_list(const std::string& value) {
  std::string body = value;
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(trim(item));
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const auto x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "'" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(ErrorKind::Config, "'" + key + "' expects true or false, got '" + v + "'");
}

std::string file_stem(const std::string& variant, std::uint64_t seed) {
  std::string s;
  for (const char c : variant) s += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return s + "_seed" + std::to_string(seed);
}

ordered_json run_json(const RunResult& r) {
  ordered_json j;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["macro_f1"] = r.test.macro;
  j["micro_f1"] = r.test.micro;
  j["per_class"] = r.test.per_class;
  j["val_macro_f1"] = r.validation_macro_f1;
  j["best_epoch"] = r.best_epoch;
  j["epochs"] = r.epochs;
  if (r.random_dim) j["random_dim"] = r.random_dim;
  if (r.penalty > 0.0) j["penalty"] = r.penalty;
  return j;
}

ordered_json ttest_json(const TTestResult& t) {
  ordered_json j;
  j["mean_difference"] = t.mean_difference;
  j["t"] = std::isfinite(t.t) ? ordered_json(t.t) : ordered_json(t.t > 0 ? "inf" : "-inf");
  j["df"] = t.degrees_of_freedom;
  j["p_value"] = t.p_value;
  j["significant_05"] = t.significant_05;
  j["significant_005"] = t.significant_005;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << body;
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void check_inputs(const ExperimentConfig& c) {
  if (c.variants.empty()) fail(ErrorKind::Config, "no variants listed");
  if (c.seeds.empty()) fail(ErrorKind::Config, "seeds must not be empty");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) fail(ErrorKind::Config, "dropout must lie in [0, 1)");
  auto need = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) fail(ErrorKind::Config, std::string("missing '") + what + "' path");
    if (!std::filesystem::exists(p)) {
      fail(ErrorKind::Io, std::string(what) + " not found: " + p.string());
    }
  };
  if (!c.corpus.empty()) {
    need(c.corpus, "corpus");
  } else {
    need(c.train, "train");
    need(c.test, "test");
  }
  bool pretrained = false;
  std::unordered_set<std::string> names;
  for (const auto& v : c.variants) {
    pretrained = pretrained || variant_uses_pretrained(v.variant);
    if (!names.insert(v.name).second) fail(ErrorKind::Config, "variant listed twice: " + v.name);
  }
  if (pretrained) need(c.pretrained, "pretrained");
  if (!c.baseline.empty() && !names.contains(c.baseline)) {
    fail(ErrorKind::Config, "baseline '" + c.baseline + "' is not among the variants");
  }
  for (const auto& v : c.variants) {
    if (v.variant == Variant::Random && c.random_dims.empty()) {
      fail(ErrorKind::Config, "random variant needs at least one entry in random_dims");
    }
  }
}

struct Prepared {
  LabeledCorpus corpus;
  WordClassMatrix wce;
  std::optional<PretrainedEmbeddings> pretrained;
  std::vector<std::string> extra_terms;
};

struct Candidate {
  RunResult result;
  double val = -1.0;
};

Candidate run_neural(const ExperimentConfig& c, const Prepared& p, const VariantSpec& spec,
                     std::uint64_t seed, std::size_t random_dim) {
  EmbeddingOptions eo;
  eo.variant = spec.variant;
  eo.trainable = spec.trainable.value_or(c.trainable);
  eo.random_dim = random_dim ? random_dim : 300;
  eo.seed = derive_seed(seed, 31);
  const bool wce_needed = variant_uses_wce(spec.variant) || spec.variant == Variant::PretrainedRandom;
  EmbeddingMatrix e = build_embedding_matrix(p.corpus.vocabulary(), p.extra_terms,
                                             p.pretrained ? &*p.pretrained : nullptr,
                                             wce_needed ? &p.wce : nullptr, eo);
  ModelConfig mc;
  mc.mode = p.corpus.mode();
  mc.dropout = c.dropout;
  mc.learning_rate = c.learning_rate;
  mc.batch_size = c.batch_size;
  mc.max_length = c.max_length;
  mc.max_epochs = c.max_epochs;
  mc.patience = c.patience;
  mc.epoch_batches = c.epoch_batches;
  mc.final_validation_epoch = c.final_validation_epoch;
  mc.seed = seed;
  const TrainingData data = training_data(p.corpus, e);
  TrainResult tr = train(data, std::move(e), p.corpus.label_index().names(), mc);
  Candidate out;
  out.result.variant = spec.name;
  out.result.seed = seed;
  out.result.test = evaluate_model(tr.model, p.corpus, Split::Test);
  out.result.validation_macro_f1 = tr.best_val_macro_f1;
  out.result.best_epoch = tr.best_epoch;
  out.result.epochs = tr.log.size();
  out.result.random_dim = spec.variant == Variant::Random ? random_dim : 0;
  out.val = tr.best_val_macro_f1;
  return out;
}

Candidate run_linear(const ExperimentConfig& c, const Prepared& p, const VariantSpec& spec,
                     std::uint64_t seed, std::size_t random_dim) {
  EmbeddingOptions eo;
  eo.variant = spec.variant;
  eo.random_dim = random_dim ? random_dim : 300;
  eo.seed = derive_seed(seed, 31);
  const bool wce_needed = variant_uses_wce(spec.variant) || spec.variant == Variant::PretrainedRandom;
  const EmbeddingMatrix e = build_embedding_matrix(p.corpus.vocabulary(), {},
                                                   p.pretrained ? &*p.pretrained : nullptr,
                                                   wce_needed ? &p.wce : nullptr, eo);
  const TfidfModel weights = TfidfModel::fit(p.corpus.encoded(Split::Train).counts);
  auto features = [&](Split s) {
    return project_documents(weights.transform(p.corpus.encoded(s).counts), e);
  };
  auto labels = [&](Split s) { return dense_labels(p.corpus.encoded(s).labels); };
  const LinearSelection sel = train_linear_baseline(features(Split::Train), labels(Split::Train),
                                                    features(Split::Validation),
                                                    labels(Split::Validation), p.corpus.mode());
  Candidate out;
  out.result.variant = spec.name;
  out.result.seed = seed;
  out.result.test = f1_scores(labels(Split::Test), sel.model.predict(features(Split::Test)));
  out.result.validation_macro_f1 = sel.validation_macro_f1;
  out.result.penalty = sel.model.penalty;
  out.result.random_dim = spec.variant == Variant::Random ? random_dim : 0;
  out.val = sel.validation_macro_f1;
  (void)c;
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config_text(std::string_view text,
                                              const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Parse, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = unquote(trim(body.substr(eq + 1)));
    if (!seen.insert(key).second) {
      fail(ErrorKind::Parse, "config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    if (key == "corpus") c.corpus = path_of(value);
    else if (key == "train") c.train = path_of(value);
    else if (key == "test") c.test = path_of(value);
    else if (key == "pretrained") c.pretrained = path_of(value);
    else if (key == "out") c.out = path_of(value);
    else if (key == "variants") {
      for (const auto& v : split_list(value)) c.variants.push_back(parse_variant_spec(v));
    } else if (key == "baseline") c.baseline = value;
    else if (key == "measure") c.measure = parse_measure(value);
    else if (key == "max_dims") c.max_dims = to_u64(key, value);
    else if (key == "dropout") c.dropout = to_double(key, value);
    else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& v : split_list(value)) c.seeds.push_back(to_u64(key, v));
    } else if (key == "min_df") c.min_df = to_u64(key, value);
    else if (key == "split_seed") c.split_seed = to_u64(key, value);
    else if (key == "mode") c.mode = parse_label_mode(value);
    else if (key == "learner") {
      if (value == "neural") c.learner = Learner::Neural;
      else if (value == "linear") c.learner = Learner::Linear;
      else fail(ErrorKind::Config, "learner must be neural or linear, got '" + value + "'");
    } else if (key == "trainable") c.trainable = to_bool(key, value);
    else if (key == "random_dims") {
      c.random_dims.clear();
      for (const auto& v : split_list(value)) c.random_dims.push_back(to_u64(key, v));
    } else if (key == "learning_rate") c.learning_rate = to_double(key, value);
    else if (key == "batch_size") c.batch_size = to_u64(key, value);
    else if (key == "max_length") c.max_length = to_u64(key, value);
    else if (key == "max_epochs") c.max_epochs = to_u64(key, value);
    else if (key == "patience") c.patience = to_u64(key, value);
    else if (key == "epoch_batches") c.epoch_batches = to_u64(key, value);
    else if (key == "final_validation_epoch") c.final_validation_epoch = to_bool(key, value);
    else fail(ErrorKind::Parse, "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return c;
}

ExperimentConfig parse_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config_text(ss.str(), path.parent_path());
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  check_inputs(config);
  ExperimentResult result;

  Prepared p{[&] {
               if (!config.corpus.empty()) return LabeledCorpus::load(config.corpus);
               CorpusOptions co;
               co.min_df = config.min_df;
               co.seed = config.split_seed;
               co.mode = config.mode;
               const auto train = read_jsonl(config.train);
               const auto test = read_jsonl(config.test);
               return LabeledCorpus::build(train, test, co);
             }(),
             {}, std::nullopt, {}};
  WceConfig wc;
  wc.measure = config.measure;
  wc.max_dims = config.max_dims;
  p.wce = corpus_wce(p.corpus, wc);
  const bool any_pretrained = std::any_of(config.variants.begin(), config.variants.end(),
                                          [](const VariantSpec& v) { return variant_uses_pretrained(v.variant); });
  if (any_pretrained) {
    p.pretrained = load_pretrained_for(p.corpus, config.pretrained);
    p.extra_terms = p.corpus.out_of_vocabulary_terms();
  }

  for (const auto& spec : config.variants) {
    for (const auto seed : config.seeds) {
      std::vector<std::size_t> dims = {0};
      if (spec.variant == Variant::Random) dims = config.random_dims;
      Candidate best;
      for (const auto dim : dims) {
        Candidate cand = config.learner == Learner::Neural ? run_neural(config, p, spec, seed, dim)
                                                           : run_linear(config, p, spec, seed, dim);
        if (cand.val > best.val) best = std::move(cand);
      }
      result.runs.push_back(std::move(best.result));
    }
  }

  auto scores = [&](const std::string& variant, bool macro) {
    std::vector<double> out;
    for (const auto& r : result.runs)
      if (r.variant == variant) out.push_back(macro ? r.test.macro : r.test.micro);
    return out;
  };
  for (const auto& spec : config.variants) {
    Aggregate a;
    a.variant = spec.name;
    const auto macro = scores(spec.name, true);
    const auto micro = scores(spec.name, false);
    a.runs = macro.size();
    std::tie(a.macro_mean, a.macro_std) = mean_std(macro);
    std::tie(a.micro_mean, a.micro_std) = mean_std(micro);
    result.aggregates.push_back(a);
  }
  if (!config.baseline.empty()) {
    if (config.seeds.size() < 2) {
      result.warnings.push_back("significance tests skipped: a single seed gives no paired variance");
    } else {
      for (const auto& spec : config.variants) {
        if (spec.name == config.baseline) continue;
        Comparison cmp;
        cmp.variant = spec.name;
        cmp.baseline = config.baseline;
        cmp.macro = paired_ttest(scores(spec.name, true), scores(config.baseline, true));
        cmp.micro = paired_ttest(scores(spec.name, false), scores(config.baseline, false));
        result.comparisons.push_back(cmp);
      }
    }
  }

  if (!config.out.empty()) {
    std::filesystem::create_directories(config.out / "runs");
    ordered_json summary;
    ordered_json cfg;
    cfg["learner"] = config.learner == Learner::Neural ? "neural" : "linear";
    cfg["measure"] = to_string(config.measure);
    cfg["dropout"] = config.dropout;
    cfg["seeds"] = config.seeds;
    cfg["min_df"] = config.min_df;
    cfg["baseline"] = config.baseline;
    ordered_json variants = ordered_json::array();
    for (const auto& v : config.variants) variants.push_back(v.name);
    cfg["variants"] = variants;
    summary["config"] = cfg;
    summary["runs"] = ordered_json::array();
    for (const auto& r : result.runs) {
      const ordered_json j = run_json(r);
      write_text(config.out / "runs" / (file_stem(r.variant, r.seed) + ".json"), j.dump(2) + "\n");
      summary["runs"].push_back(j);
    }
    summary["aggregates"] = ordered_json::array();
    for (const auto& a : result.aggregates) {
      ordered_json j;
      j["variant"] = a.variant;
      j["runs"] = a.runs;
      j["macro_f1_mean"] = a.macro_mean;
      j["macro_f1_std"] = a.macro_std;
      j["micro_f1_mean"] = a.micro_mean;
      j["micro_f1_std"] = a.micro_std;
      summary["aggregates"].push_back(j);
    }
    summary["significance"] = ordered_json::array();
    for (const auto& cmp : result.comparisons) {
      ordered_json j;
      j["variant"] = cmp.variant;
      j["baseline"] = cmp.baseline;
      j["macro_f1"] = ttest_json(cmp.macro);
      j["micro_f1"] = ttest_json(cmp.micro);
      summary["significance"].push_back(j);
    }
    summary["warnings"] = result.warnings;
    write_text(config.out / "summary.json", summary.dump(2) + "\n");

    std::ostringstream csv;
    csv << "variant,runs,macro_f1_mean,macro_f1_std,micro_f1_mean,micro_f1_std,p_value_macro\n";
    for (const auto& a : result.aggregates) {
      std::string p;
      for (const auto& cmp : result.comparisons)
        if (cmp.variant == a.variant) p = ordered_json(cmp.macro.p_value).dump();
      csv << a.variant << ',' << a.runs << ',' << ordered_json(a.macro_mean).dump() << ','
          << ordered_json(a.macro_std).dump() << ',' << ordered_json(a.micro_mean).dump() << ','
          << ordered_json(a.micro_std).dump() << ',' << p << '\n';
    }
    write_text(config.out / "summary.csv", csv.str());
  }
  return result;
}

}  // namespace wce
