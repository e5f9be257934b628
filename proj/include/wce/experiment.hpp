#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wce/classifier.hpp"
#include "wce/corpus.hpp"
#include "wce/embeddings.hpp"
#include "wce/eval.hpp"
#include "wce/word_class.hpp"

namespace wce {

/// Word-class matrix of the corpus' training split (tfidf weighting for the
/// dot measure), with terms and column names filled in.
WordClassMatrix corpus_wce(const LabeledCorpus& corpus, const WceConfig& config,
                           WceTiming* timing = nullptr);

/// Loads only the pretrained vectors of vocabulary and out-of-vocabulary terms.
PretrainedEmbeddings load_pretrained_for(const LabeledCorpus& corpus,
                                         const std::filesystem::path& path);

/// Test-split (or other split) scores of a trained model.
F1Scores evaluate_model(const Model& model, const LabeledCorpus& corpus, Split split);

/// A variant name with an optional ":static" / ":trainable" suffix.
struct VariantSpec {
  std::string name;  // as written in the config
  Variant variant = Variant::PretrainedWce;
  std::optional<bool> trainable;
};

VariantSpec parse_variant_spec(std::string_view text);

enum class Learner { Neural, Linear };

/// Experiment description read from a key = value file.
struct ExperimentConfig {
  std::filesystem::path corpus;  // prebuilt corpus directory, or
  std::filesystem::path train;   // raw JSON-lines splits
  std::filesystem::path test;
  std::filesystem::path pretrained;
  std::vector<VariantSpec> variants;
  std::string baseline;
  Measure measure = Measure::Dot;
  std::size_t max_dims = 300;
  double dropout = 0.5;
  std::vector<std::uint64_t> seeds = {0};
  std::filesystem::path out;
  std::size_t min_df = 5;
  std::uint64_t split_seed = 0;
  std::optional<LabelMode> mode;
  Learner learner = Learner::Neural;
  bool trainable = false;
  std::vector<std::size_t> random_dims = {50, 200, 300};
  double learning_rate = 1e-3;
  std::size_t batch_size = 100;
  std::size_t max_length = 500;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::size_t epoch_batches = 0;
  bool final_validation_epoch = true;
};

/// Parses "key = value" lines; '#' starts a comment, values may be quoted,
/// lists are comma separated. Relative paths resolve against the file's
/// directory.
ExperimentConfig parse_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config_text(std::string_view text,
                                              const std::filesystem::path& base_dir);

struct RunResult {
  std::string variant;
  std::uint64_t seed = 0;
  F1Scores test;
  double validation_macro_f1 = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;
  std::size_t random_dim = 0;  // chosen width for random spans, 0 if none
  double penalty = 0.0;        // linear learner only
};

struct Aggregate {
  std::string variant;
  std::size_t runs = 0;
  double macro_mean = 0.0, macro_std = 0.0;
  double micro_mean = 0.0, micro_std = 0.0;
};

struct Comparison {
  std::string variant;
  std::string baseline;
  TTestResult macro;
  TTestResult micro;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::vector<Aggregate> aggregates;
  std::vector<Comparison> comparisons;
  std::vector<std::string> warnings;
};

/// Trains and evaluates every variant for every seed. Inputs are checked
/// before any computation. When out is set, writes runs/<variant>_seed<k>.json,
/// summary.json and summary.csv there.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Sample mean and standard deviation (0 for a single value).
std::pair<double, double> mean_std(std::span<const double> values);

}  // namespace wce
