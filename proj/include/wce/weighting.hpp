#pragma once

#include <span>
#include <vector>

#include "wce/sparse.hpp"

namespace wce {

/// Smooth-idf tfidf with L2-normalized rows.
///
///   idf(t)     = ln((1 + n) / (1 + df(t))) + 1
///   x(d, t)    = count(d, t) * idf(t), then each nonzero row scaled to unit L2 norm
///
/// The idf statistics come from the matrix passed to fit() (the training
/// split) and are reused unchanged for other splits.
class TfidfModel {
 public:
  static TfidfModel fit(const SparseMatrix& train_counts);

  SparseMatrix transform(const SparseMatrix& counts) const;

  std::span<const double> idf() const noexcept { return idf_; }

 private:
  std::vector<double> idf_;
};

/// fit + transform on the same matrix.
SparseMatrix tfidf(const SparseMatrix& counts);

/// Scales every column with a nonzero sum so that it sums to 1.
SparseMatrix l1_normalize_columns(const SparseMatrix& x);

/// Presence/absence indicators (every stored value becomes 1).
SparseMatrix binarize(const SparseMatrix& x);

}  // namespace wce
