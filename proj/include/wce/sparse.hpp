#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "wce/matrix.hpp"

namespace wce {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within a row, no explicit zeros
/// are stored, and every value is finite.
class SparseMatrix {
 public:
  struct RowView {
    std::span<const std::uint32_t> indices;
    std::span<const double> values;
  };

  SparseMatrix() : row_ptr_(1, 0) {}
  SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  /// Validates the CSR invariants; throws Error on violation.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
               std::vector<std::uint32_t> col_idx, std::vector<double> values);

  /// Duplicate (row, col) entries are summed; resulting zeros are dropped.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const Matrix& dense);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::uint32_t> col_indices() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  RowView row(std::size_t r) const noexcept {
    const std::size_t b = row_ptr_[r];
    const std::size_t e = row_ptr_[r + 1];
    return {std::span<const std::uint32_t>(col_idx_).subspan(b, e - b),
            std::span<const double>(values_).subspan(b, e - b)};
  }

  double at(std::size_t r, std::size_t c) const;

  Matrix to_dense() const;
  SparseMatrix transposed() const;

  /// New matrix with value f(row, col, value) for every stored entry; entries
  /// mapped to zero are removed.
  SparseMatrix map_values(const std::function<double(std::size_t, std::size_t, double)>& f) const;

  /// Rows selected by index, in the given order.
  SparseMatrix select_rows(std::span<const std::size_t> rows) const;

  std::vector<double> column_sums() const;
  std::vector<double> row_sums() const;

  /// Binary container: little-endian magic, shape, row pointers, indices, f64 values.
  void save(const std::filesystem::path& path) const;
  static SparseMatrix load(const std::filesystem::path& path);

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

/// Sparse-dense product a * b.
Matrix multiply(const SparseMatrix& a, const Matrix& b);

/// a^T * b for two sparse matrices with the same row count, as a dense matrix.
Matrix transpose_multiply(const SparseMatrix& a, const SparseMatrix& b);

}  // namespace wce
