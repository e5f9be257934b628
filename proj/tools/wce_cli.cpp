// Command-line front end over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wce/wce.h"

namespace {

struct Failure {
  wce_status status;
};

void check(wce_status st) {
  if (st != WCE_OK) throw Failure{st};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Corpus = Handle<wce_corpus, wce_corpus_free>;
using WordClass = Handle<wce_word_class, wce_word_class_free>;
using Embeddings = Handle<wce_embeddings, wce_embeddings_free>;
using Model = Handle<wce_model, wce_model_free>;
using Regressor = Handle<wce_regressor, wce_regressor_free>;

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { wce_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Writes to path, or stdout when path is empty.
void emit(const std::string& path, const std::string& body) {
  if (path.empty()) std::cout << body;
  else write_file(path, body);
}

struct Globals {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool verbose = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Word-class embeddings: build corpora, compute WCEs, train and evaluate classifiers"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_flag("--verbose,-v", g.verbose, "Progress messages on stderr");

  // build-corpus
  auto* bc = app.add_subcommand("build-corpus", "Tokenize JSON-lines documents into a corpus directory");
  std::string bc_train, bc_test, bc_manifest, bc_out, bc_mode = "auto";
  wce_corpus_options bc_opts;
  wce_corpus_options_init(&bc_opts);
  bc->add_option("--train", bc_train, "Training documents (or every document with --manifest)")->required();
  bc->add_option("--test", bc_test, "Test documents");
  bc->add_option("--manifest", bc_manifest, "Split manifest {\"train\": [ids], \"test\": [ids]}");
  bc->add_option("--min-df", bc_opts.min_df, "Minimum training document frequency")->capture_default_str();
  bc->add_option("--validation-fraction", bc_opts.validation_fraction)->capture_default_str();
  bc->add_option("--validation-cap", bc_opts.validation_cap)->capture_default_str();
  bc->add_option("--mode", bc_mode, "auto, single or multi")->check(CLI::IsMember({"auto", "single", "multi"}));
  bc->add_option("--out", bc_out, "Output directory")->required();

  // compute
  auto* cp = app.add_subcommand("compute", "Compute the word-class matrix of a corpus");
  std::string cp_corpus, cp_measure = "dot", cp_out, cp_text;
  std::size_t cp_max_dims = 300;
  bool cp_timing = false;
  cp->add_option("--corpus", cp_corpus)->required();
  cp->add_option("--measure", cp_measure)->check(CLI::IsMember({"dot", "ppmi", "ig", "chi2"}))->capture_default_str();
  cp->add_option("--max-dims", cp_max_dims, "PCA is applied when there are more classes")->capture_default_str();
  cp->add_option("--out", cp_out, "Binary word-class matrix")->required();
  cp->add_option("--text", cp_text, "Also write a text export");
  cp->add_flag("--timing", cp_timing, "Print stage timings to stderr");

  // build-embeddings
  auto* be = app.add_subcommand("build-embeddings", "Assemble the embedding layer");
  std::string be_corpus, be_pretrained, be_wce, be_variant = "pretrained+wce", be_out, be_text;
  std::size_t be_random_dim = 300;
  bool be_trainable = false, be_static = false;
  be->add_option("--corpus", be_corpus)->required();
  be->add_option("--pretrained", be_pretrained, "Pretrained vectors (text)");
  be->add_option("--wce", be_wce, "Word-class matrix from compute");
  be->add_option("--variant", be_variant)
      ->check(CLI::IsMember({"random", "pretrained", "pretrained+random", "pretrained+wce", "wce"}))
      ->capture_default_str();
  be->add_option("--random-dim", be_random_dim)->capture_default_str();
  auto* be_tr = be->add_flag("--trainable", be_trainable);
  be->add_flag("--static", be_static)->excludes(be_tr);
  be->add_option("--out", be_out)->required();
  be->add_option("--text", be_text, "Also write a text export");

  // train
  auto* tr = app.add_subcommand("train", "Train the mean-pooling classifier");
  std::string tr_corpus, tr_embeddings, tr_variant, tr_out, tr_log;
  wce_train_options tr_opts;
  wce_train_options_init(&tr_opts);
  bool tr_trainable = false, tr_static = false, tr_no_final = false;
  tr->add_option("--corpus", tr_corpus)->required();
  tr->add_option("--embeddings", tr_embeddings)->required();
  tr->add_option("--variant", tr_variant, "Expected variant of the embedding layer");
  auto* tr_tr = tr->add_flag("--trainable", tr_trainable);
  tr->add_flag("--static", tr_static)->excludes(tr_tr);
  tr->add_option("--dropout", tr_opts.dropout, "Supervised dropout probability")->capture_default_str();
  tr->add_option("--lr", tr_opts.learning_rate)->capture_default_str();
  tr->add_option("--batch-size", tr_opts.batch_size)->capture_default_str();
  tr->add_option("--max-length", tr_opts.max_length)->capture_default_str();
  tr->add_option("--max-epochs", tr_opts.max_epochs)->capture_default_str();
  tr->add_option("--patience", tr_opts.patience)->capture_default_str();
  tr->add_option("--epoch-batches", tr_opts.epoch_batches, "Cap on batches per epoch (0 = full pass)")->capture_default_str();
  tr->add_flag("--no-final-validation-epoch", tr_no_final);
  tr->add_option("--out", tr_out)->required();
  tr->add_option("--log", tr_log, "Training log (default: <out>.log.jsonl)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a model on a corpus split");
  std::string ev_model, ev_corpus, ev_split = "test", ev_out;
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--corpus", ev_corpus)->required();
  ev->add_option("--split", ev_split)->check(CLI::IsMember({"train", "validation", "test"}))->capture_default_str();
  ev->add_option("--out", ev_out, "Results JSON (default: stdout)");

  // oov-train
  auto* ot = app.add_subcommand("oov-train", "Fit the pretrained-to-WCE regressor");
  std::string ot_embeddings, ot_out, ot_log;
  wce_regressor_options ot_opts;
  wce_regressor_options_init(&ot_opts);
  ot->add_option("--embeddings", ot_embeddings, "pretrained+wce embedding layer")->required();
  ot->add_option("--hidden", ot_opts.hidden)->capture_default_str();
  ot->add_option("--dropout", ot_opts.dropout)->capture_default_str();
  ot->add_option("--lr", ot_opts.learning_rate)->capture_default_str();
  ot->add_option("--batch-size", ot_opts.batch_size)->capture_default_str();
  ot->add_option("--max-epochs", ot_opts.max_epochs)->capture_default_str();
  ot->add_option("--patience", ot_opts.patience)->capture_default_str();
  ot->add_option("--out", ot_out)->required();
  ot->add_option("--log", ot_log, "MSE history as JSON");

  // oov-impute
  auto* oi = app.add_subcommand("oov-impute", "Predict WCEs for rows that lack one");
  std::string oi_embeddings, oi_regressor, oi_out;
  oi->add_option("--embeddings", oi_embeddings)->required();
  oi->add_option("--regressor", oi_regressor)->required();
  oi->add_option("--out", oi_out)->required();

  // oov-inspect
  auto* os = app.add_subcommand("oov-inspect", "List unseen terms by their strongest predicted class");
  std::string os_regressor, os_embeddings, os_out;
  std::size_t os_top = 20;
  os->add_option("--regressor", os_regressor)->required();
  os->add_option("--embeddings", os_embeddings, "Pretrained vectors (text)")->required();
  os->add_option("--top", os_top)->capture_default_str();
  os->add_option("--out", os_out, "Output file (default: stdout)");

  // export-projector
  auto* ep = app.add_subcommand("export-projector", "Write vectors.tsv and metadata.tsv");
  std::string ep_embeddings, ep_corpus, ep_columns = "all", ep_out;
  std::size_t ep_budget = 5000;
  ep->add_option("--embeddings", ep_embeddings)->required();
  ep->add_option("--corpus", ep_corpus)->required();
  ep->add_option("--budget", ep_budget)->capture_default_str();
  ep->add_option("--columns", ep_columns)->check(CLI::IsMember({"all", "leading", "trailing"}))->capture_default_str();
  ep->add_option("--out", ep_out)->required();

  // run-experiment
  auto* rx = app.add_subcommand("run-experiment", "Train and evaluate variants over several seeds");
  std::string rx_config, rx_out;
  rx->add_option("--config", rx_config)->required();
  rx->add_option("--out", rx_out, "Overrides the config's out key");

  // make-synthetic
  auto* ms = app.add_subcommand("make-synthetic", "Generate a synthetic labeled corpus and pretrained vectors");
  std::string ms_out;
  wce_synthetic_options ms_opts;
  wce_synthetic_options_init(&ms_opts);
  ms->add_option("--documents", ms_opts.documents)->capture_default_str();
  ms->add_option("--classes", ms_opts.classes)->capture_default_str();
  ms->add_option("--terms-per-class", ms_opts.terms_per_class)->capture_default_str();
  ms->add_option("--noise-terms", ms_opts.noise_terms)->capture_default_str();
  ms->add_option("--noise-fraction", ms_opts.noise_fraction)->capture_default_str();
  ms->add_option("--purity", ms_opts.purity)->capture_default_str();
  ms->add_option("--min-length", ms_opts.min_length)->capture_default_str();
  ms->add_option("--max-length", ms_opts.max_length)->capture_default_str();
  ms->add_option("--test-fraction", ms_opts.test_fraction)->capture_default_str();
  ms->add_option("--pretrained-dim", ms_opts.pretrained_dim)->capture_default_str();
  ms->add_option("--classes-per-topic", ms_opts.classes_per_topic)->capture_default_str();
  ms->add_option("--class-scale", ms_opts.class_scale)->capture_default_str();
  ms->add_option("--spurious-per-class", ms_opts.spurious_per_class)->capture_default_str();
  ms->add_option("--spurious-rate", ms_opts.spurious_rate)->capture_default_str();
  ms->add_option("--oov-fraction", ms_opts.oov_fraction)->capture_default_str();
  ms->add_option("--out", ms_out)->required();

  CLI11_PARSE(app, argc, argv);

  wce_set_threads(g.threads);
  wce_set_verbose(g.verbose ? 1 : 0);

  try {
    if (*bc) {
      bc_opts.seed = g.seed;
      bc_opts.mode = bc_mode == "auto" ? -1 : bc_mode == "single" ? 0 : 1;
      if (bc_manifest.empty() && bc_test.empty()) throw std::runtime_error("--test or --manifest is required");
      Corpus corpus;
      check(wce_corpus_build(bc_train.c_str(), bc_test.c_str(), bc_manifest.c_str(), &bc_opts, corpus.out()));
      check(wce_corpus_save(corpus.get(), bc_out.c_str()));
      std::size_t v = 0, m = 0, ntr = 0, nva = 0, nte = 0;
      check(wce_corpus_info(corpus.get(), &v, &m, &ntr, &nva, &nte));
      std::cerr << "corpus: " << v << " terms, " << m << " classes, " << ntr << "/" << nva << "/"
                << nte << " train/validation/test documents\n";
    } else if (*cp) {
      Corpus corpus;
      check(wce_corpus_load(cp_corpus.c_str(), corpus.out()));
      WordClass s;
      wce_timing t{};
      check(wce_compute(corpus.get(), cp_measure.c_str(), cp_max_dims, s.out(), &t));
      check(wce_word_class_save(s.get(), cp_out.c_str()));
      if (!cp_text.empty()) check(wce_word_class_export_text(s.get(), cp_text.c_str()));
      if (cp_timing) {
        std::fprintf(stderr, "correlate %.4fs  standardize %.4fs  pca %.4fs\n", t.correlate_seconds,
                     t.standardize_seconds, t.pca_seconds);
      }
    } else if (*be) {
      Corpus corpus;
      check(wce_corpus_load(be_corpus.c_str(), corpus.out()));
      WordClass s;
      if (!be_wce.empty()) check(wce_word_class_load(be_wce.c_str(), s.out()));
      wce_embedding_options o;
      wce_embedding_options_init(&o);
      o.variant = be_variant.c_str();
      o.trainable = be_trainable ? 1 : 0;
      o.random_dim = be_random_dim;
      o.seed = g.seed;
      Embeddings e;
      check(wce_embeddings_build(corpus.get(), be_pretrained.empty() ? nullptr : be_pretrained.c_str(),
                                 s.get(), &o, e.out()));
      check(wce_embeddings_save(e.get(), be_out.c_str()));
      if (!be_text.empty()) check(wce_embeddings_export_text(e.get(), be_text.c_str(), "all"));
    } else if (*tr) {
      Corpus corpus;
      check(wce_corpus_load(tr_corpus.c_str(), corpus.out()));
      Embeddings e;
      check(wce_embeddings_load(tr_embeddings.c_str(), e.out()));
      if (!tr_variant.empty() && tr_variant != wce_embeddings_variant(e.get())) {
        throw std::runtime_error("embedding layer is '" + std::string(wce_embeddings_variant(e.get())) +
                                 "', not '" + tr_variant + "'");
      }
      tr_opts.seed = g.seed;
      tr_opts.trainable = tr_trainable ? 1 : tr_static ? 0 : -1;
      tr_opts.final_validation_epoch = tr_no_final ? 0 : 1;
      const std::string log = tr_log.empty() ? tr_out + ".log.jsonl" : tr_log;
      Model model;
      check(wce_train(corpus.get(), e.get(), &tr_opts, log.c_str(), model.out()));
      check(wce_model_save(model.get(), tr_out.c_str()));
    } else if (*ev) {
      Model model;
      check(wce_model_load(ev_model.c_str(), model.out()));
      Corpus corpus;
      check(wce_corpus_load(ev_corpus.c_str(), corpus.out()));
      OwnedString json;
      check(wce_evaluate(model.get(), corpus.get(), ev_split.c_str(), &json.ptr));
      emit(ev_out, json.str() + "\n");
    } else if (*ot) {
      Embeddings e;
      check(wce_embeddings_load(ot_embeddings.c_str(), e.out()));
      ot_opts.seed = g.seed;
      Regressor reg;
      OwnedString log;
      check(wce_oov_train(e.get(), &ot_opts, reg.out(), &log.ptr));
      check(wce_regressor_save(reg.get(), ot_out.c_str()));
      if (!ot_log.empty()) write_file(ot_log, log.str() + "\n");
    } else if (*oi) {
      Embeddings e;
      check(wce_embeddings_load(oi_embeddings.c_str(), e.out()));
      Regressor reg;
      check(wce_regressor_load(oi_regressor.c_str(), reg.out()));
      Embeddings imputed;
      std::size_t rows = 0;
      check(wce_oov_impute(e.get(), reg.get(), imputed.out(), &rows));
      check(wce_embeddings_save(imputed.get(), oi_out.c_str()));
      std::cerr << "imputed " << rows << " rows\n";
    } else if (*os) {
      Regressor reg;
      check(wce_regressor_load(os_regressor.c_str(), reg.out()));
      OwnedString text;
      check(wce_oov_inspect(reg.get(), os_embeddings.c_str(), os_top, &text.ptr));
      emit(os_out, text.str());
    } else if (*ep) {
      Embeddings e;
      check(wce_embeddings_load(ep_embeddings.c_str(), e.out()));
      Corpus corpus;
      check(wce_corpus_load(ep_corpus.c_str(), corpus.out()));
      check(wce_export_projector(e.get(), corpus.get(), ep_budget, ep_columns.c_str(), ep_out.c_str()));
    } else if (*rx) {
      OwnedString summary;
      check(wce_run_experiment(rx_config.c_str(), rx_out.empty() ? nullptr : rx_out.c_str(), &summary.ptr));
      if (g.verbose) std::cerr << summary.str();
    } else if (*ms) {
      ms_opts.seed = g.seed;
      check(wce_make_synthetic(&ms_opts, ms_out.c_str()));
    }
  } catch (const Failure& f) {
    std::cerr << "error (" << wce_status_name(f.status) << "): " << wce_last_error() << '\n';
    return 1 + static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
