#include "wce/wce.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <new>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "text_format.hpp"
#include "wce/classifier.hpp"
#include "wce/corpus.hpp"
#include "wce/embeddings.hpp"
#include "wce/error.hpp"
#include "wce/experiment.hpp"
#include "wce/oov.hpp"
#include "wce/parallel.hpp"
#include "wce/projector.hpp"
#include "wce/synthetic.hpp"
#include "wce/word_class.hpp"

struct wce_corpus {
  wce::LabeledCorpus value;
};
struct wce_word_class {
  wce::WordClassMatrix value;
};
struct wce_embeddings {
  wce::EmbeddingMatrix value;
};
struct wce_model {
  wce::Model value;
};
struct wce_regressor {
  wce::Regressor value;
};

namespace {

thread_local std::string g_last_error;
std::atomic<bool> g_verbose{false};

wce_status status_of(wce::ErrorKind kind) {
  switch (kind) {
    case wce::ErrorKind::Config: return WCE_ERR_CONFIG;
    case wce::ErrorKind::Data: return WCE_ERR_DATA;
    case wce::ErrorKind::Dimension: return WCE_ERR_DIMENSION;
    case wce::ErrorKind::Parse: return WCE_ERR_PARSE;
    case wce::ErrorKind::Io: return WCE_ERR_IO;
    case wce::ErrorKind::Numeric: return WCE_ERR_NUMERIC;
  }
  return WCE_ERR_INTERNAL;
}

struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
wce_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return WCE_OK;
  } catch (const wce::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const ArgumentError& e) {
    g_last_error = e.what();
    return WCE_ERR_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return WCE_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return WCE_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WCE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return WCE_ERR_INTERNAL;
  }
}

template <typename T>
const T& deref(const T* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " must not be NULL");
  return *p;
}

const char* need(const char* s, const char* what) {
  if (!s || !*s) throw ArgumentError(std::string(what) + " must be a non-empty string");
  return s;
}

template <typename T>
void need_out(T** out, const char* what) {
  if (!out) throw ArgumentError(std::string(what) + " must not be NULL");
  *out = nullptr;
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void say(const std::string& msg) {
  if (g_verbose.load()) std::cerr << msg << '\n';
}

wce::EmbeddingMatrix::Columns parse_columns(const char* columns) {
  const std::string_view c = columns ? columns : "all";
  if (c == "all") return wce::EmbeddingMatrix::Columns::All;
  if (c == "leading") return wce::EmbeddingMatrix::Columns::Leading;
  if (c == "trailing") return wce::EmbeddingMatrix::Columns::Trailing;
  throw ArgumentError("columns must be all, leading or trailing, got '" + std::string(c) + "'");
}

wce::Split parse_split(const char* split) {
  const std::string_view s = split ? split : "test";
  if (s == "train") return wce::Split::Train;
  if (s == "validation") return wce::Split::Validation;
  if (s == "test") return wce::Split::Test;
  throw wce::Error(wce::ErrorKind::Config,
                   "split must be train, validation or test, got '" + std::string(s) + "'");
}

}  // namespace

extern "C" {

const char* wce_version(void) { return "0.1.0"; }

const char* wce_last_error(void) { return g_last_error.c_str(); }

const char* wce_status_name(wce_status status) {
  switch (status) {
    case WCE_OK: return "ok";
    case WCE_ERR_CONFIG: return "configuration error";
    case WCE_ERR_DATA: return "data error";
    case WCE_ERR_DIMENSION: return "dimension error";
    case WCE_ERR_PARSE: return "parse error";
    case WCE_ERR_IO: return "i/o error";
    case WCE_ERR_NUMERIC: return "numeric error";
    case WCE_ERR_ARGUMENT: return "invalid argument";
    case WCE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void wce_string_free(char* s) { std::free(s); }

void wce_set_threads(size_t threads) { wce::set_thread_count(threads); }

void wce_set_verbose(int verbose) { g_verbose.store(verbose != 0); }

void wce_corpus_options_init(wce_corpus_options* o) {
  if (!o) return;
  const wce::CorpusOptions d;
  o->min_df = d.min_df;
  o->seed = d.seed;
  o->validation_fraction = d.validation_fraction;
  o->validation_cap = d.validation_cap;
  o->mode = -1;
}

wce_status wce_corpus_build(const char* train_path, const char* test_path,
                            const char* manifest_path, const wce_corpus_options* options,
                            wce_corpus** out) {
  return guarded([&] {
    need_out(out, "out");
    need(train_path, "train_path");
    wce::CorpusOptions co;
    if (options) {
      co.min_df = options->min_df;
      co.seed = options->seed;
      co.validation_fraction = options->validation_fraction;
      co.validation_cap = options->validation_cap;
      if (options->mode == 0) co.mode = wce::LabelMode::SingleLabel;
      else if (options->mode == 1) co.mode = wce::LabelMode::Multilabel;
      else if (options->mode != -1) throw ArgumentError("mode must be -1, 0 or 1");
    }
    std::vector<wce::Document> train, test;
    if (manifest_path && *manifest_path) {
      const auto all = wce::read_jsonl(train_path);
      wce::apply_split_manifest(all, manifest_path, train, test);
    } else {
      train = wce::read_jsonl(train_path);
      test = wce::read_jsonl(need(test_path, "test_path"));
    }
    say("building corpus: " + std::to_string(train.size()) + " training and " +
        std::to_string(test.size()) + " test documents");
    *out = new wce_corpus{wce::LabeledCorpus::build(train, test, co)};
  });
}

wce_status wce_corpus_save(const wce_corpus* corpus, const char* dir) {
  return guarded([&] { deref(corpus, "corpus").value.save(need(dir, "dir")); });
}

wce_status wce_corpus_load(const char* dir, wce_corpus** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = new wce_corpus{wce::LabeledCorpus::load(need(dir, "dir"))};
  });
}

wce_status wce_corpus_info(const wce_corpus* corpus, size_t* vocabulary, size_t* classes,
                           size_t* train_docs, size_t* validation_docs, size_t* test_docs) {
  return guarded([&] {
    const auto& c = deref(corpus, "corpus").value;
    if (vocabulary) *vocabulary = c.vocabulary().size();
    if (classes) *classes = c.label_index().size();
    if (train_docs) *train_docs = c.split(wce::Split::Train).size();
    if (validation_docs) *validation_docs = c.split(wce::Split::Validation).size();
    if (test_docs) *test_docs = c.split(wce::Split::Test).size();
  });
}

void wce_corpus_free(wce_corpus* corpus) { delete corpus; }

wce_status wce_compute(const wce_corpus* corpus, const char* measure, size_t max_dims,
                       wce_word_class** out, wce_timing* timing) {
  return guarded([&] {
    need_out(out, "out");
    wce::WceConfig cfg;
    cfg.measure = wce::parse_measure(measure ? measure : "dot");
    cfg.max_dims = max_dims;
    wce::WceTiming t;
    auto s = wce::corpus_wce(deref(corpus, "corpus").value, cfg, &t);
    say("word-class matrix " + std::to_string(s.rows()) + " x " + std::to_string(s.dims()) +
        (s.reduced ? " (PCA)" : ""));
    if (timing) *timing = {t.correlate_seconds, t.standardize_seconds, t.pca_seconds};
    *out = new wce_word_class{std::move(s)};
  });
}

wce_status wce_word_class_save(const wce_word_class* s, const char* path) {
  return guarded([&] { deref(s, "word_class").value.save(need(path, "path")); });
}

wce_status wce_word_class_load(const char* path, wce_word_class** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = new wce_word_class{wce::WordClassMatrix::load(need(path, "path"))};
  });
}

wce_status wce_word_class_export_text(const wce_word_class* s, const char* path) {
  return guarded([&] { deref(s, "word_class").value.export_text(need(path, "path")); });
}

wce_status wce_word_class_shape(const wce_word_class* s, size_t* rows, size_t* dims) {
  return guarded([&] {
    const auto& w = deref(s, "word_class").value;
    if (rows) *rows = w.rows();
    if (dims) *dims = w.dims();
  });
}

void wce_word_class_free(wce_word_class* s) { delete s; }

void wce_embedding_options_init(wce_embedding_options* o) {
  if (!o) return;
  o->variant = "pretrained+wce";
  o->trainable = 0;
  o->random_dim = 300;
  o->seed = 0;
}

wce_status wce_embeddings_build(const wce_corpus* corpus, const char* pretrained_path,
                                const wce_word_class* word_class,
                                const wce_embedding_options* options, wce_embeddings** out) {
  return guarded([&] {
    need_out(out, "out");
    const auto& c = deref(corpus, "corpus").value;
    wce_embedding_options defaults;
    wce_embedding_options_init(&defaults);
    const auto& o = options ? *options : defaults;
    wce::EmbeddingOptions eo;
    eo.variant = wce::parse_variant(need(o.variant, "variant"));
    eo.trainable = o.trainable != 0;
    eo.random_dim = o.random_dim;
    eo.seed = o.seed;
    std::optional<wce::PretrainedEmbeddings> pre;
    if (wce::variant_uses_pretrained(eo.variant)) {
      if (!pretrained_path) {
        throw wce::Error(wce::ErrorKind::Config,
                         "variant " + std::string(o.variant) + " needs pretrained vectors");
      }
      pre = wce::load_pretrained_for(c, pretrained_path);
      say("pretrained vectors matched: " + std::to_string(pre->vectors.size()));
    }
    const auto extra = c.out_of_vocabulary_terms();
    auto e = wce::build_embedding_matrix(c.vocabulary(), extra, pre ? &*pre : nullptr,
                                         word_class ? &word_class->value : nullptr, eo);
    *out = new wce_embeddings{std::move(e)};
  });
}

wce_status wce_embeddings_save(const wce_embeddings* e, const char* path) {
  return guarded([&] { deref(e, "embeddings").value.save(need(path, "path")); });
}

wce_status wce_embeddings_load(const char* path, wce_embeddings** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = new wce_embeddings{wce::EmbeddingMatrix::load(need(path, "path"))};
  });
}

wce_status wce_embeddings_export_text(const wce_embeddings* e, const char* path,
                                      const char* columns) {
  return guarded([&] {
    deref(e, "embeddings").value.export_text(need(path, "path"), parse_columns(columns));
  });
}

wce_status wce_embeddings_shape(const wce_embeddings* e, size_t* rows, size_t* q, size_t* r) {
  return guarded([&] {
    const auto& m = deref(e, "embeddings").value;
    if (rows) *rows = m.rows();
    if (q) *q = m.q;
    if (r) *r = m.r;
  });
}

const char* wce_embeddings_variant(const wce_embeddings* e) {
  return e ? wce::to_string(e->value.variant) : "";
}

void wce_embeddings_free(wce_embeddings* e) { delete e; }

void wce_train_options_init(wce_train_options* o) {
  if (!o) return;
  const wce::ModelConfig d;
  o->dropout = d.dropout;
  o->learning_rate = d.learning_rate;
  o->batch_size = d.batch_size;
  o->max_length = d.max_length;
  o->max_epochs = d.max_epochs;
  o->patience = d.patience;
  o->epoch_batches = d.epoch_batches;
  o->final_validation_epoch = d.final_validation_epoch ? 1 : 0;
  o->trainable = -1;
  o->seed = d.seed;
}

wce_status wce_train(const wce_corpus* corpus, const wce_embeddings* embeddings,
                     const wce_train_options* options, const char* log_path, wce_model** out) {
  return guarded([&] {
    need_out(out, "out");
    const auto& c = deref(corpus, "corpus").value;
    const auto& e = deref(embeddings, "embeddings").value;
    wce_train_options defaults;
    wce_train_options_init(&defaults);
    const auto& o = options ? *options : defaults;
    wce::ModelConfig mc;
    mc.mode = c.mode();
    mc.dropout = o.dropout;
    mc.learning_rate = o.learning_rate;
    mc.batch_size = o.batch_size;
    mc.max_length = o.max_length;
    mc.max_epochs = o.max_epochs;
    mc.patience = o.patience;
    mc.epoch_batches = o.epoch_batches;
    mc.final_validation_epoch = o.final_validation_epoch != 0;
    if (o.trainable == 0 || o.trainable == 1) mc.trainable = o.trainable == 1;
    else if (o.trainable != -1) throw ArgumentError("trainable must be -1, 0 or 1");
    mc.seed = o.seed;
    const auto data = wce::training_data(c, e);
    auto result = wce::train(data, e, c.label_index().names(), mc);
    std::ofstream log;
    if (log_path && *log_path) {
      log.open(log_path, std::ios::binary | std::ios::trunc);
      if (!log) throw wce::Error(wce::ErrorKind::Io, std::string("cannot write ") + log_path);
    }
    for (const auto& entry : result.log) {
      const auto line = wce::to_json_line(entry);
      if (log.is_open()) log << line << '\n';
      say(line);
    }
    if (log.is_open() && !log) throw wce::Error(wce::ErrorKind::Io, std::string("write failed: ") + log_path);
    *out = new wce_model{std::move(result.model)};
  });
}

wce_status wce_model_save(const wce_model* model, const char* path) {
  return guarded([&] { deref(model, "model").value.save(need(path, "path")); });
}

wce_status wce_model_load(const char* path, wce_model** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = new wce_model{wce::Model::load(need(path, "path"))};
  });
}

void wce_model_free(wce_model* model) { delete model; }

wce_status wce_evaluate(const wce_model* model, const wce_corpus* corpus, const char* split,
                        char** json_out) {
  return guarded([&] {
    need_out(json_out, "json_out");
    const auto& m = deref(model, "model").value;
    const auto& c = deref(corpus, "corpus").value;
    if (m.class_names != c.label_index().names()) {
      throw wce::Error(wce::ErrorKind::Data, "model and corpus have different class lists");
    }
    const auto scores = wce::evaluate_model(m, c, parse_split(split));
    nlohmann::ordered_json j;
    j["macro_f1"] = scores.macro;
    j["micro_f1"] = scores.micro;
    j["per_class"] = scores.per_class;
    j["classes"] = m.class_names;
    *json_out = dup_string(j.dump());
  });
}

void wce_regressor_options_init(wce_regressor_options* o) {
  if (!o) return;
  const wce::RegressorConfig d;
  o->hidden = d.hidden;
  o->dropout = d.dropout;
  o->learning_rate = d.learning_rate;
  o->batch_size = d.batch_size;
  o->max_epochs = d.max_epochs;
  o->patience = d.patience;
  o->holdout_fraction = d.holdout_fraction;
  o->min_terms = d.min_terms;
  o->seed = d.seed;
}

wce_status wce_oov_train(const wce_embeddings* embeddings, const wce_regressor_options* options,
                         wce_regressor** out, char** log_json) {
  return guarded([&] {
    need_out(out, "out");
    if (log_json) *log_json = nullptr;
    wce_regressor_options defaults;
    wce_regressor_options_init(&defaults);
    const auto& o = options ? *options : defaults;
    wce::RegressorConfig rc;
    rc.hidden = o.hidden;
    rc.dropout = o.dropout;
    rc.learning_rate = o.learning_rate;
    rc.batch_size = o.batch_size;
    rc.max_epochs = o.max_epochs;
    rc.patience = o.patience;
    rc.holdout_fraction = o.holdout_fraction;
    rc.min_terms = o.min_terms;
    rc.seed = o.seed;
    auto result = wce::train_regressor(deref(embeddings, "embeddings").value, rc);
    say("regressor: best holdout MSE " + wce::text::format_g6(result.log.best_holdout_mse) +
        " at epoch " + std::to_string(result.log.best_epoch));
    if (log_json) {
      nlohmann::ordered_json j;
      j["train_terms"] = result.log.train_terms;
      j["holdout_terms"] = result.log.holdout_terms;
      j["best_epoch"] = result.log.best_epoch;
      j["best_holdout_mse"] = result.log.best_holdout_mse;
      j["train_mse"] = result.log.train_mse;
      j["holdout_mse"] = result.log.holdout_mse;
      *log_json = dup_string(j.dump());
    }
    *out = new wce_regressor{std::move(result.regressor)};
  });
}

wce_status wce_oov_impute(const wce_embeddings* embeddings, const wce_regressor* regressor,
                          wce_embeddings** out, size_t* imputed_rows) {
  return guarded([&] {
    need_out(out, "out");
    const auto& e = deref(embeddings, "embeddings").value;
    auto imputed = wce::impute_oov(e, deref(regressor, "regressor").value);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < e.rows(); ++i) changed += imputed.has_wce[i] != e.has_wce[i];
    if (imputed_rows) *imputed_rows = changed;
    *out = new wce_embeddings{std::move(imputed)};
  });
}

wce_status wce_oov_inspect(const wce_regressor* regressor, const char* pretrained_path, size_t top,
                           char** text_out) {
  return guarded([&] {
    need_out(text_out, "text_out");
    const auto u = wce::load_pretrained(need(pretrained_path, "pretrained_path"));
    const auto items = wce::inspect_oov(deref(regressor, "regressor").value, u, top);
    std::string text;
    for (const auto& item : items) {
      text += item.term + '\t' + item.output_name + '\t' + wce::text::format_g6(item.value) + '\n';
    }
    *text_out = dup_string(text);
  });
}

wce_status wce_regressor_save(const wce_regressor* regressor, const char* path) {
  return guarded([&] { deref(regressor, "regressor").value.save(need(path, "path")); });
}

wce_status wce_regressor_load(const char* path, wce_regressor** out) {
  return guarded([&] {
    need_out(out, "out");
    *out = new wce_regressor{wce::Regressor::load(need(path, "path"))};
  });
}

void wce_regressor_free(wce_regressor* regressor) { delete regressor; }

wce_status wce_export_projector(const wce_embeddings* embeddings, const wce_corpus* corpus,
                                size_t budget, const char* columns, const char* out_dir) {
  return guarded([&] {
    const auto& e = deref(embeddings, "embeddings").value;
    const auto& c = deref(corpus, "corpus").value;
    if (e.training_rows != c.vocabulary().size()) {
      throw wce::Error(wce::ErrorKind::Data, "embedding rows do not follow the corpus vocabulary");
    }
    wce::ProjectorOptions po;
    po.budget = budget;
    po.columns = parse_columns(columns);
    const auto sel = wce::export_projector(e, wce::information_gain(c), c.label_index().names(),
                                           need(out_dir, "out_dir"), po);
    say("projector: exported " + std::to_string(sel.rows.size()) + " terms");
  });
}

wce_status wce_run_experiment(const char* config_path, const char* out_dir, char** summary_json) {
  return guarded([&] {
    if (summary_json) *summary_json = nullptr;
    auto cfg = wce::parse_experiment_config(need(config_path, "config_path"));
    if (out_dir && *out_dir) cfg.out = out_dir;
    const auto result = wce::run_experiment(cfg);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    if (summary_json) {
      if (cfg.out.empty()) {
        nlohmann::ordered_json j;
        j["runs"] = result.runs.size();
        *summary_json = dup_string(j.dump());
      } else {
        std::ifstream in(cfg.out / "summary.json", std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        *summary_json = dup_string(ss.str());
      }
    }
  });
}

void wce_synthetic_options_init(wce_synthetic_options* o) {
  if (!o) return;
  const wce::SyntheticConfig d;
  o->documents = d.documents;
  o->classes = d.classes;
  o->terms_per_class = d.terms_per_class;
  o->noise_terms = d.noise_terms;
  o->noise_fraction = d.noise_fraction;
  o->purity = d.purity;
  o->min_length = d.min_length;
  o->max_length = d.max_length;
  o->test_fraction = d.test_fraction;
  o->pretrained_dim = d.pretrained_dim;
  o->classes_per_topic = d.classes_per_topic;
  o->class_scale = d.class_scale;
  o->spurious_per_class = d.spurious_per_class;
  o->spurious_rate = d.spurious_rate;
  o->oov_fraction = d.oov_fraction;
  o->seed = d.seed;
}

wce_status wce_make_synthetic(const wce_synthetic_options* options, const char* out_dir) {
  return guarded([&] {
    wce_synthetic_options defaults;
    wce_synthetic_options_init(&defaults);
    const auto& o = options ? *options : defaults;
    wce::SyntheticConfig sc;
    sc.documents = o.documents;
    sc.classes = o.classes;
    sc.terms_per_class = o.terms_per_class;
    sc.noise_terms = o.noise_terms;
    sc.noise_fraction = o.noise_fraction;
    sc.purity = o.purity;
    sc.min_length = o.min_length;
    sc.max_length = o.max_length;
    sc.test_fraction = o.test_fraction;
    sc.pretrained_dim = o.pretrained_dim;
    sc.classes_per_topic = o.classes_per_topic;
    sc.class_scale = o.class_scale;
    sc.spurious_per_class = o.spurious_per_class;
    sc.spurious_rate = o.spurious_rate;
    sc.oov_fraction = o.oov_fraction;
    sc.seed = o.seed;
    wce::write_synthetic(wce::make_synthetic(sc), need(out_dir, "out_dir"));
  });
}

}  // extern "C"
