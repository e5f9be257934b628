#include "wce/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wce/error.hpp"

namespace wce {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Numeric: return "numeric error";
  }
  return "error";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    fail(ErrorKind::Dimension, "matrix data size " + std::to_string(data_.size()) +
                                   " does not match shape " + std::to_string(rows) + "x" +
                                   std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) fail(ErrorKind::Dimension, "ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::column_block(std::size_t first, std::size_t count) const {
  if (first + count > cols_) fail(ErrorKind::Dimension, "column block out of range");
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto src = row(r).subspan(first, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorKind::Dimension, "matmul: " + std::to_string(a.rows()) + "x" +
                                   std::to_string(a.cols()) + " times " +
                                   std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::Dimension, "max_abs_diff: shape mismatch");
  }
  double worst = 0.0;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

}  // namespace wce
