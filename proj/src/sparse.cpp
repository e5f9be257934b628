#include "wce/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "wce/error.hpp"
#include "wce/parallel.hpp"

namespace wce {

namespace {
constexpr std::string_view kCsrMagic = "WCSR";
constexpr std::uint32_t kCsrVersion = 1;

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}
}  // namespace

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                           std::vector<std::uint32_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 ||
      row_ptr_.back() != values_.size() || col_idx_.size() != values_.size()) {
    fail(ErrorKind::Data, "CSR arrays inconsistent with shape " + shape_str(rows_, cols_));
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    if (row_ptr_[r] > row_ptr_[r + 1]) fail(ErrorKind::Data, "CSR row pointers not monotone");
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (col_idx_[k] >= cols_) fail(ErrorKind::Data, "CSR column index out of range");
      if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1]) {
        fail(ErrorKind::Data, "CSR column indices not strictly increasing in row " +
                                  std::to_string(r));
      }
      if (values_[k] == 0.0) fail(ErrorKind::Data, "CSR stores an explicit zero");
      if (!std::isfinite(values_[k])) fail(ErrorKind::Data, "CSR stores a non-finite value");
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      fail(ErrorKind::Dimension, "triplet (" + std::to_string(t.row) + "," +
                                     std::to_string(t.col) + ") outside " +
                                     shape_str(rows, cols));
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  for (std::size_t i = 0; i < triplets.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row &&
           triplets[j].col == triplets[i].col) {
      sum += triplets[j].value;
      ++j;
    }
    if (sum != 0.0) {
      if (!std::isfinite(sum)) fail(ErrorKind::Numeric, "non-finite sparse value");
      m.col_idx_.push_back(static_cast<std::uint32_t>(triplets[i].col));
      m.values_.push_back(sum);
      ++m.row_ptr_[triplets[i].row + 1];
    }
    i = j;
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  SparseMatrix m(dense.rows(), dense.cols());
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      const double v = dense(r, c);
      if (v == 0.0) continue;
      if (!std::isfinite(v)) fail(ErrorKind::Numeric, "non-finite sparse value");
      m.col_idx_.push_back(static_cast<std::uint32_t>(c));
      m.values_.push_back(v);
    }
    m.row_ptr_[r + 1] = m.values_.size();
  }
  return m;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto view = row(r);
  const auto it = std::lower_bound(view.indices.begin(), view.indices.end(), c);
  if (it == view.indices.end() || *it != c) return 0.0;
  return view.values[static_cast<std::size_t>(it - view.indices.begin())];
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(r, col_idx_[k]) = values_[k];
  }
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t(cols_, rows_);
  t.col_idx_.resize(nnz());
  t.values_.resize(nnz());
  for (const auto c : col_idx_) ++t.row_ptr_[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) t.row_ptr_[c + 1] += t.row_ptr_[c];
  std::vector<std::size_t> cursor(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const std::size_t dst = cursor[col_idx_[k]]++;
      t.col_idx_[dst] = static_cast<std::uint32_t>(r);
      t.values_[dst] = values_[k];
    }
  }
  return t;
}

SparseMatrix SparseMatrix::map_values(
    const std::function<double(std::size_t, std::size_t, double)>& f) const {
  SparseMatrix out(rows_, cols_);
  out.col_idx_.reserve(nnz());
  out.values_.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const double v = f(r, col_idx_[k], values_[k]);
      if (v == 0.0) continue;
      if (!std::isfinite(v)) fail(ErrorKind::Numeric, "non-finite sparse value");
      out.col_idx_.push_back(col_idx_[k]);
      out.values_.push_back(v);
    }
    out.row_ptr_[r + 1] = out.values_.size();
  }
  return out;
}

SparseMatrix SparseMatrix::select_rows(std::span<const std::size_t> rows) const {
  SparseMatrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) fail(ErrorKind::Dimension, "select_rows: row out of range");
    const auto view = row(rows[i]);
    out.col_idx_.insert(out.col_idx_.end(), view.indices.begin(), view.indices.end());
    out.values_.insert(out.values_.end(), view.values.begin(), view.values.end());
    out.row_ptr_[i + 1] = out.values_.size();
  }
  return out;
}

std::vector<double> SparseMatrix::column_sums() const {
  std::vector<double> sums(cols_, 0.0);
  for (std::size_t k = 0; k < nnz(); ++k) sums[col_idx_[k]] += values_[k];
  return sums;
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> sums(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) sums[r] += values_[k];
  return sums;
}

void SparseMatrix::save(const std::filesystem::path& path) const {
  io::BinaryWriter w(path, kCsrMagic, kCsrVersion);
  w.u64(rows_);
  w.u64(cols_);
  w.u64(nnz());
  for (const auto p : row_ptr_) w.u64(p);
  w.raw(col_idx_.data(), col_idx_.size() * sizeof(std::uint32_t));
  w.raw(values_.data(), values_.size() * sizeof(double));
  w.close();
}

SparseMatrix SparseMatrix::load(const std::filesystem::path& path) {
  io::BinaryReader r(path, kCsrMagic, kCsrVersion);
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  const std::uint64_t nnz = r.u64();
  if (rows > (1ULL << 40) || nnz > (1ULL << 40)) fail(ErrorKind::Parse, "CSR header implausible");
  std::vector<std::size_t> row_ptr(rows + 1);
  for (auto& p : row_ptr) p = r.u64();
  std::vector<std::uint32_t> col_idx(nnz);
  r.raw(col_idx.data(), nnz * sizeof(std::uint32_t));
  std::vector<double> values(nnz);
  r.raw(values.data(), nnz * sizeof(double));
  r.expect_end();
  return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

Matrix multiply(const SparseMatrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorKind::Dimension, "sparse multiply: " + shape_str(a.rows(), a.cols()) + " times " +
                                   shape_str(b.rows(), b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  parallel_for(a.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto view = a.row(i);
      auto dst = out.row(i);
      for (std::size_t k = 0; k < view.indices.size(); ++k) {
        const double v = view.values[k];
        const auto src = b.row(view.indices[k]);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += v * src[j];
      }
    }
  });
  return out;
}

Matrix transpose_multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows()) {
    fail(ErrorKind::Dimension, "transpose_multiply: " + shape_str(a.rows(), a.cols()) +
                                   " and " + shape_str(b.rows(), b.cols()) +
                                   " differ in row count");
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto ra = a.row(k);
    const auto rb = b.row(k);
    if (rb.indices.empty()) continue;
    for (std::size_t p = 0; p < ra.indices.size(); ++p) {
      auto dst = out.row(ra.indices[p]);
      const double va = ra.values[p];
      for (std::size_t q = 0; q < rb.indices.size(); ++q) dst[rb.indices[q]] += va * rb.values[q];
    }
  }
  return out;
}

}  // namespace wce
