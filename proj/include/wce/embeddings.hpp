#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wce/corpus.hpp"
#include "wce/matrix.hpp"
#include "wce/sparse.hpp"
#include "wce/word_class.hpp"

namespace wce {

struct PretrainedEmbeddings {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::string source;

  const std::vector<double>* find(std::string_view term) const;
};

/// Parses "token f1 ... fq" lines, splitting from the right so tokens may
/// contain spaces. q comes from the first line (a leading "count dim"
/// word2vec header is accepted and skipped). When keep is non-null only
/// listed tokens are retained.
PretrainedEmbeddings load_pretrained(const std::filesystem::path& path,
                                     const std::unordered_set<std::string>* keep = nullptr);

void save_pretrained_text(const std::filesystem::path& path, const PretrainedEmbeddings& u);

/// How the embedding layer is assembled.
enum class Variant {
  Random,            // one random span, trainable
  Pretrained,        // pretrained span only
  PretrainedRandom,  // pretrained + random span of WCE width
  PretrainedWce,     // pretrained + word-class span
  Wce,               // word-class span only
};

const char* to_string(Variant v) noexcept;
Variant parse_variant(std::string_view name);
bool variant_uses_pretrained(Variant v) noexcept;
bool variant_uses_wce(Variant v) noexcept;

enum class SpanKind : std::uint8_t { None, Pretrained, Supervised, Random };

/// Embedding layer E = [leading span (q columns) | trailing span (r columns)].
///
/// The leading span holds pretrained vectors (or the random vectors of the
/// Random variant); the trailing span holds WCEs (or random stand-ins).
/// Supervised dropout acts on the trailing span only. Rows [0, training_rows)
/// are the training vocabulary in vocabulary order; later rows are extra
/// terms that only have a pretrained vector.
struct EmbeddingMatrix {
  Matrix values;
  std::size_t q = 0;
  std::size_t r = 0;
  Variant variant = Variant::Pretrained;
  SpanKind leading_kind = SpanKind::None;
  SpanKind trailing_kind = SpanKind::None;
  bool leading_trainable = false;
  bool trailing_trainable = false;
  std::size_t training_rows = 0;
  std::vector<std::string> terms;
  std::vector<std::uint8_t> has_pretrained;  // leading span populated
  std::vector<std::uint8_t> has_wce;         // trailing span populated
  std::vector<std::string> trailing_names;   // class (or component) names of the trailing span

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t dims() const noexcept { return q + r; }

  std::optional<std::uint32_t> index_of(std::string_view term) const;
  void rebuild_index();

  /// Throws if any row violates the zero-span rules implied by its flags.
  void validate() const;

  void save(const std::filesystem::path& path) const;
  static EmbeddingMatrix load(const std::filesystem::path& path);

  enum class Columns { All, Leading, Trailing };
  /// Text export, same layout as pretrained files, 6 significant digits.
  void export_text(const std::filesystem::path& path, Columns which = Columns::All) const;

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct EmbeddingOptions {
  Variant variant = Variant::PretrainedWce;
  bool trainable = false;
  /// Width of the random span for the Random variant, and for
  /// Pretrained+Random when no word-class matrix is supplied.
  std::size_t random_dim = 300;
  double random_scale = 0.25;  // uniform in [-scale, scale]
  std::uint64_t seed = 0;
};

/// extra_terms: candidate out-of-vocabulary terms; those with a pretrained
/// vector become extra rows (only for variants that use pretrained vectors).
EmbeddingMatrix build_embedding_matrix(const Vocabulary& vocab,
                                       std::span<const std::string> extra_terms,
                                       const PretrainedEmbeddings* pretrained,
                                       const WordClassMatrix* wce, const EmbeddingOptions& options);

/// X * E restricted to the training-vocabulary rows of E.
Matrix project_documents(const SparseMatrix& x, const EmbeddingMatrix& e);

/// Maps tokens to embedding rows; tokens without a row map to e.rows().
std::vector<Sequence> sequences_for(std::span<const TokenizedDocument> docs,
                                    const EmbeddingMatrix& e);

}  // namespace wce
