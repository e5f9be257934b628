#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wce/matrix.hpp"
#include "wce/sparse.hpp"

namespace wce {

/// Replacement token for any token containing at least one digit.
inline constexpr std::string_view kNumberToken = "numbertoken";

using TokenList = std::vector<std::string>;
using Sequence = std::vector<std::uint32_t>;

struct Document {
  std::string id;
  std::string text;
  std::vector<std::string> labels;
};

struct TokenizedDocument {
  std::string id;
  TokenList tokens;
  std::vector<std::string> labels;
};

enum class LabelMode { SingleLabel, Multilabel };

const char* to_string(LabelMode mode) noexcept;
LabelMode parse_label_mode(std::string_view name);

/// Sorted list of the built-in English stop words.
std::span<const std::string_view> stop_words();
bool is_stop_word(std::string_view token);

/// Lowercases, splits on anything that is not an ASCII letter/digit or a
/// non-ASCII UTF-8 byte, drops tokens shorter than two characters and stop
/// words, and replaces tokens containing a digit with kNumberToken.
TokenList tokenize(std::string_view text);

class Vocabulary {
 public:
  Vocabulary() = default;
  /// Terms must be unique and sorted; df aligned with terms.
  Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> document_frequency,
             std::size_t min_df);

  std::size_t size() const noexcept { return terms_.size(); }
  std::size_t min_df() const noexcept { return min_df_; }
  /// Id reserved for out-of-vocabulary tokens in sequences.
  std::uint32_t unk_id() const noexcept { return static_cast<std::uint32_t>(terms_.size()); }

  std::optional<std::uint32_t> index_of(std::string_view term) const;
  const std::string& term(std::size_t i) const { return terms_.at(i); }
  std::size_t document_frequency(std::size_t i) const { return df_.at(i); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::size_t min_df_ = 1;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Keeps terms with document frequency >= min_df, indexed in lexicographic
/// order. Throws a configuration error if nothing survives.
Vocabulary build_vocabulary(std::span<const TokenList> docs, std::size_t min_df);

class LabelIndex {
 public:
  LabelIndex() = default;
  /// Names must be unique; at least two classes.
  LabelIndex(std::vector<std::string> names, LabelMode mode);

  /// Classes observed in the documents, sorted by name.
  static LabelIndex from_documents(std::span<const TokenizedDocument> docs, LabelMode mode);

  std::size_t size() const noexcept { return names_.size(); }
  LabelMode mode() const noexcept { return mode_; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  LabelMode mode_ = LabelMode::SingleLabel;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EncodedSplit {
  std::vector<Sequence> sequences;  // vocabulary ids; OOV -> unk_id
  SparseMatrix counts;              // n x v raw term counts, OOV dropped
  SparseMatrix labels;              // n x m binary
};

/// Throws a data error naming the document when a label is not in the index.
EncodedSplit encode(std::span<const TokenizedDocument> docs, const Vocabulary& vocab,
                    const LabelIndex& labels);

enum class Split { Train, Validation, Test };
const char* to_string(Split split) noexcept;

struct CorpusOptions {
  std::size_t min_df = 5;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
  std::size_t validation_cap = 20000;
  /// Unset: multilabel iff some training document has != 1 label.
  std::optional<LabelMode> mode;
};

/// Tokenized train/validation/test partitions with the vocabulary and label
/// index built on the training partition (validation documents excluded).
class LabeledCorpus {
 public:
  static LabeledCorpus build(std::span<const Document> training, std::span<const Document> test,
                             const CorpusOptions& options);

  const std::vector<TokenizedDocument>& split(Split s) const;
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const LabelIndex& label_index() const noexcept { return labels_; }
  LabelMode mode() const noexcept { return labels_.mode(); }
  const CorpusOptions& options() const noexcept { return options_; }

  const EncodedSplit& encoded(Split s) const;

  /// Distinct tokens across all splits that are not in the vocabulary, sorted.
  std::vector<std::string> out_of_vocabulary_terms() const;

  void save(const std::filesystem::path& dir) const;
  static LabeledCorpus load(const std::filesystem::path& dir);

  /// Assembles a corpus from pre-tokenized partitions (used by load()).
  LabeledCorpus(std::vector<TokenizedDocument> train, std::vector<TokenizedDocument> validation,
                std::vector<TokenizedDocument> test, Vocabulary vocab, LabelIndex labels,
                CorpusOptions options);

 private:
  std::vector<TokenizedDocument> train_, validation_, test_;
  Vocabulary vocab_;
  LabelIndex labels_;
  CorpusOptions options_;
  EncodedSplit enc_train_, enc_validation_, enc_test_;
};

/// Reads {"id","text","labels"} objects, one per line. Blank lines skipped.
std::vector<Document> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, std::span<const Document> docs);

/// Splits documents by a manifest {"train": [ids], "test": [ids]}.
void apply_split_manifest(std::span<const Document> all, const std::filesystem::path& manifest,
                          std::vector<Document>& train, std::vector<Document>& test);

/// Indices of the validation sample for a training set of size n.
std::vector<std::size_t> validation_indices(std::size_t n, const CorpusOptions& options);

/// Dense 0/1 copy of a binary label matrix.
Matrix dense_labels(const SparseMatrix& labels);

}  // namespace wce
