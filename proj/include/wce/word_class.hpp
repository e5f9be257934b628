#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wce/matrix.hpp"
#include "wce/sparse.hpp"

namespace wce {

/// Term-class correlation function used to fill the word-class matrix.
enum class Measure { Dot, Ppmi, InfoGain, Chi2 };

const char* to_string(Measure m) noexcept;
Measure parse_measure(std::string_view name);

struct WceConfig {
  Measure measure = Measure::Dot;
  /// PCA is applied iff the number of classes exceeds this.
  std::size_t max_dims = 300;
};

/// Standardized term-class matrix: one row per training-vocabulary term.
struct WordClassMatrix {
  Matrix values;  // v x r
  Measure measure = Measure::Dot;
  bool reduced = false;
  std::vector<double> column_means;  // of the raw correlations, length m
  std::vector<double> column_stds;   // sample std (denominator v - 1), length m
  std::vector<std::string> column_names;
  std::vector<std::string> terms;  // row labels (may be empty for bare matrices)

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t dims() const noexcept { return values.cols(); }

  void save(const std::filesystem::path& path) const;
  static WordClassMatrix load(const std::filesystem::path& path);

  /// One line per term: the term followed by its values, 6 significant digits.
  void export_text(const std::filesystem::path& path) const;
};

/// A = X1^T Y where X1 is column-L1-normalized (n x v) and Y binary (n x m).
Matrix correlate_dot(const SparseMatrix& x1, const SparseMatrix& y);

/// 2x2 contingency measures over binary presence/absence (maximum-likelihood
/// probabilities, natural logarithms, degenerate marginals -> 0).
Matrix correlate_ppmi(const SparseMatrix& xbin, const SparseMatrix& y);
Matrix correlate_ig(const SparseMatrix& xbin, const SparseMatrix& y);
Matrix correlate_chi2(const SparseMatrix& xbin, const SparseMatrix& y);

/// Per-cell helpers from raw counts: tp = docs with term and class, df =
/// docs with term, nc = docs with class, n = all docs.
double ppmi_cell(double tp, double df, double nc, double n);
double ig_cell(double tp, double df, double nc, double n);
double chi2_cell(double tp, double df, double nc, double n);

struct Standardized {
  Matrix values;
  std::vector<double> means;
  std::vector<double> stds;
};

/// Column z-scores with sample std; constant columns become all-zero.
/// Requires at least two rows.
Standardized standardize_columns(const Matrix& a);

struct PcaResult {
  Matrix projected;                         // v x r
  Matrix components;                        // m x r, orthonormal columns
  std::vector<double> explained_variance;   // length r, decreasing
  double total_variance = 0.0;

  double explained_variance_ratio() const;
};

/// Projects rows onto the top-r principal directions of the column
/// covariance. Each component's largest-magnitude loading is positive.
PcaResult pca_reduce(const Matrix& s, std::size_t r);

struct WceTiming {
  double correlate_seconds = 0.0;
  double standardize_seconds = 0.0;
  double pca_seconds = 0.0;
};

/// Full pipeline from the weighted training matrix x (n x v) and labels y:
/// correlate -> standardize -> PCA iff m > max_dims.
WordClassMatrix compute_wce(const SparseMatrix& x, const SparseMatrix& y, const WceConfig& config,
                            WceTiming* timing = nullptr);

}  // namespace wce
