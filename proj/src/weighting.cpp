#include "wce/weighting.hpp"

#include <cmath>
#include <string>

#include "wce/error.hpp"

namespace wce {

TfidfModel TfidfModel::fit(const SparseMatrix& train_counts) {
  const double n = static_cast<double>(train_counts.rows());
  std::vector<double> df(train_counts.cols(), 0.0);
  for (const auto c : train_counts.col_indices()) df[c] += 1.0;
  TfidfModel model;
  model.idf_.resize(df.size());
  for (std::size_t t = 0; t < df.size(); ++t) {
    model.idf_[t] = std::log((1.0 + n) / (1.0 + df[t])) + 1.0;
  }
  return model;
}

SparseMatrix TfidfModel::transform(const SparseMatrix& counts) const {
  if (counts.cols() != idf_.size()) {
    fail(ErrorKind::Dimension, "tfidf: matrix has " + std::to_string(counts.cols()) +
                                   " columns, model fitted on " + std::to_string(idf_.size()));
  }
  for (const double v : counts.values()) {
    if (v < 0.0) fail(ErrorKind::Data, "tfidf: counts must be nonnegative");
  }
  std::vector<double> norms(counts.rows(), 0.0);
  for (std::size_t r = 0; r < counts.rows(); ++r) {
    const auto view = counts.row(r);
    double sq = 0.0;
    for (std::size_t k = 0; k < view.indices.size(); ++k) {
      const double w = view.values[k] * idf_[view.indices[k]];
      sq += w * w;
    }
    norms[r] = std::sqrt(sq);
  }
  return counts.map_values([&](std::size_t r, std::size_t c, double v) {
    return v * idf_[c] / norms[r];
  });
}

SparseMatrix tfidf(const SparseMatrix& counts) { return TfidfModel::fit(counts).transform(counts); }

SparseMatrix l1_normalize_columns(const SparseMatrix& x) {
  for (const double v : x.values()) {
    if (v < 0.0) fail(ErrorKind::Data, "l1_normalize_columns: matrix must be nonnegative");
  }
  const auto sums = x.column_sums();
  return x.map_values([&](std::size_t, std::size_t c, double v) { return v / sums[c]; });
}

SparseMatrix binarize(const SparseMatrix& x) {
  return x.map_values([](std::size_t, std::size_t, double) { return 1.0; });
}

}  // namespace wce
