#include "wce/word_class.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "binary_io.hpp"
#include "text_format.hpp"
#include "wce/error.hpp"
#include "wce/parallel.hpp"
#include "wce/weighting.hpp"

namespace wce {

namespace {

constexpr std::string_view kWceMagic = "WCEM";
constexpr std::uint32_t kWceVersion = 1;

struct Marginals {
  Matrix co;               // v x m co-occurrence counts
  std::vector<double> df;  // per term
  std::vector<double> nc;  // per class
  double n = 0.0;
};

Marginals contingency_counts(const SparseMatrix& xbin, const SparseMatrix& y) {
  if (xbin.rows() != y.rows()) {
    fail(ErrorKind::Dimension, "term matrix has " + std::to_string(xbin.rows()) +
                                   " rows, label matrix " + std::to_string(y.rows()));
  }
  for (const double v : xbin.values()) {
    if (v != 1.0) fail(ErrorKind::Data, "contingency measures require a binarized term matrix");
  }
  Marginals m;
  m.co = transpose_multiply(xbin, y);
  m.df = xbin.column_sums();
  m.nc = y.column_sums();
  m.n = static_cast<double>(xbin.rows());
  return m;
}

template <typename CellFn>
Matrix contingency_measure(const SparseMatrix& xbin, const SparseMatrix& y, CellFn cell) {
  const Marginals mg = contingency_counts(xbin, y);
  Matrix out(mg.co.rows(), mg.co.cols());
  parallel_for(out.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t)
      for (std::size_t c = 0; c < out.cols(); ++c)
        out(t, c) = cell(mg.co(t, c), mg.df[t], mg.nc[c], mg.n);
  });
  return out;
}

bool degenerate(double df, double nc, double n) {
  return n <= 0.0 || df <= 0.0 || df >= n || nc <= 0.0 || nc >= n;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

const char* to_string(Measure m) noexcept {
  switch (m) {
    case Measure::Dot: return "dot";
    case Measure::Ppmi: return "ppmi";
    case Measure::InfoGain: return "ig";
    case Measure::Chi2: return "chi2";
  }
  return "?";
}

Measure parse_measure(std::string_view name) {
  if (name == "dot") return Measure::Dot;
  if (name == "ppmi") return Measure::Ppmi;
  if (name == "ig") return Measure::InfoGain;
  if (name == "chi2") return Measure::Chi2;
  fail(ErrorKind::Config, "unknown measure '" + std::string(name) + "' (dot|ppmi|ig|chi2)");
}

Matrix correlate_dot(const SparseMatrix& x1, const SparseMatrix& y) {
  if (x1.rows() != y.rows()) {
    fail(ErrorKind::Dimension, "correlate_dot: X1 has " + std::to_string(x1.rows()) +
                                   " rows, Y has " + std::to_string(y.rows()));
  }
  return transpose_multiply(x1, y);
}

double ppmi_cell(double tp, double df, double nc, double n) {
  if (degenerate(df, nc, n) || tp <= 0.0) return 0.0;
  const double pmi = std::log((tp * n) / (df * nc));
  return std::max(0.0, pmi);
}

double ig_cell(double tp, double df, double nc, double n) {
  if (degenerate(df, nc, n)) return 0.0;
  const double cells[4] = {tp, df - tp, nc - tp, n - df - nc + tp};
  const double pt[2] = {df / n, (n - df) / n};
  const double pc[2] = {nc / n, (n - nc) / n};
  double ig = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double p = cells[i * 2 + j] / n;
      if (p <= 0.0) continue;
      ig += p * std::log(p / (pt[i] * pc[j]));
    }
  }
  return ig;
}

double chi2_cell(double tp, double df, double nc, double n) {
  if (degenerate(df, nc, n)) return 0.0;
  const double p_tc = tp / n;
  const double p_tnc = (df - tp) / n;
  const double p_ntc = (nc - tp) / n;
  const double p_ntnc = (n - df - nc + tp) / n;
  const double pt = df / n;
  const double pc = nc / n;
  const double diff = p_tc * p_ntnc - p_tnc * p_ntc;
  return n * diff * diff / (pt * (1.0 - pt) * pc * (1.0 - pc));
}

Matrix correlate_ppmi(const SparseMatrix& xbin, const SparseMatrix& y) {
  return contingency_measure(xbin, y, ppmi_cell);
}

Matrix correlate_ig(const SparseMatrix& xbin, const SparseMatrix& y) {
  return contingency_measure(xbin, y, ig_cell);
}

Matrix correlate_chi2(const SparseMatrix& xbin, const SparseMatrix& y) {
  return contingency_measure(xbin, y, chi2_cell);
}

Standardized standardize_columns(const Matrix& a) {
  const std::size_t v = a.rows();
  const std::size_t m = a.cols();
  if (v < 2) fail(ErrorKind::Dimension, "standardize_columns needs at least 2 rows, got " +
                                            std::to_string(v));
  Standardized out{Matrix(v, m), std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  for (std::size_t j = 0; j < m; ++j) {
    bool constant = true;
    double sum = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      sum += a(i, j);
      if (a(i, j) != a(0, j)) constant = false;
    }
    const double mean = sum / static_cast<double>(v);
    out.means[j] = mean;
    if (constant) {
      out.means[j] = a(0, j);
      continue;  // std 0, column stays zero
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      const double d = a(i, j) - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(v - 1));
    out.stds[j] = sd;
    for (std::size_t i = 0; i < v; ++i) out.values(i, j) = (a(i, j) - mean) / sd;
  }
  return out;
}

double PcaResult::explained_variance_ratio() const {
  if (total_variance <= 0.0) return 0.0;
  double kept = 0.0;
  for (const double ev : explained_variance) kept += ev;
  return kept / total_variance;
}

PcaResult pca_reduce(const Matrix& s, std::size_t r) {
  const std::size_t v = s.rows();
  const std::size_t m = s.cols();
  if (r == 0 || r > std::min(v, m)) {
    fail(ErrorKind::Dimension, "pca_reduce: r=" + std::to_string(r) + " must be in [1, " +
                                   std::to_string(std::min(v, m)) + "]");
  }
  if (v < 2) fail(ErrorKind::Dimension, "pca_reduce needs at least 2 rows");

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> data(s.data().data(), static_cast<Eigen::Index>(v),
                                static_cast<Eigen::Index>(m));
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const RowMat centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(v - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(ErrorKind::Numeric, "PCA eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();   // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();

  PcaResult out;
  out.components = Matrix(m, r);
  out.explained_variance.resize(r);
  out.total_variance = cov.trace();
  for (std::size_t k = 0; k < r; ++k) {
    const Eigen::Index src = static_cast<Eigen::Index>(m - 1 - k);
    out.explained_variance[k] = std::max(0.0, evals(src));
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
      if (std::abs(evecs(i, src)) > best + 1e-12) {
        best = std::abs(evecs(i, src));
        arg = i;
      }
    }
    const double sign = evecs(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      out.components(i, k) = sign * evecs(static_cast<Eigen::Index>(i), src);
    }
  }

  out.projected = Matrix(v, r);
  for (std::size_t i = 0; i < v; ++i) {
    for (std::size_t k = 0; k < r; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += centered(i, j) * out.components(j, k);
      out.projected(i, k) = acc;
    }
  }
  return out;
}

WordClassMatrix compute_wce(const SparseMatrix& x, const SparseMatrix& y, const WceConfig& config,
                            WceTiming* timing) {
  if (config.max_dims < 1) fail(ErrorKind::Config, "max_dims must be >= 1");
  if (x.rows() != y.rows()) {
    fail(ErrorKind::Dimension, "compute_wce: X has " + std::to_string(x.rows()) +
                                   " rows, Y has " + std::to_string(y.rows()));
  }
  WceTiming local;
  auto start = std::chrono::steady_clock::now();
  Matrix a;
  switch (config.measure) {
    case Measure::Dot: a = correlate_dot(l1_normalize_columns(x), y); break;
    case Measure::Ppmi: a = correlate_ppmi(binarize(x), y); break;
    case Measure::InfoGain: a = correlate_ig(binarize(x), y); break;
    case Measure::Chi2: a = correlate_chi2(binarize(x), y); break;
  }
  local.correlate_seconds = seconds_since(start);

  start = std::chrono::steady_clock::now();
  Standardized st = standardize_columns(a);
  local.standardize_seconds = seconds_since(start);

  WordClassMatrix out;
  out.measure = config.measure;
  out.column_means = std::move(st.means);
  out.column_stds = std::move(st.stds);
  if (y.cols() > config.max_dims) {
    start = std::chrono::steady_clock::now();
    PcaResult pca = pca_reduce(st.values, config.max_dims);
    local.pca_seconds = seconds_since(start);
    out.values = std::move(pca.projected);
    out.reduced = true;
    for (std::size_t k = 0; k < out.values.cols(); ++k) {
      out.column_names.push_back("pc" + std::to_string(k + 1));
    }
  } else {
    out.values = std::move(st.values);
  }
  if (!out.values.all_finite()) fail(ErrorKind::Numeric, "word-class matrix has non-finite entries");
  if (timing) *timing = local;
  return out;
}

void WordClassMatrix::save(const std::filesystem::path& path) const {
  io::BinaryWriter w(path, kWceMagic, kWceVersion);
  w.u8(static_cast<std::uint8_t>(measure));
  w.u8(reduced ? 1 : 0);
  w.strings(column_names);
  w.strings(terms);
  w.f64s(column_means);
  w.f64s(column_stds);
  w.matrix(values);
  w.close();
}

WordClassMatrix WordClassMatrix::load(const std::filesystem::path& path) {
  io::BinaryReader r(path, kWceMagic, kWceVersion);
  WordClassMatrix out;
  const auto measure = r.u8();
  if (measure > static_cast<std::uint8_t>(Measure::Chi2)) {
    fail(ErrorKind::Parse, path.string() + ": unknown measure tag");
  }
  out.measure = static_cast<Measure>(measure);
  out.reduced = r.u8() != 0;
  out.column_names = r.strings();
  out.terms = r.strings();
  out.column_means = r.f64s();
  out.column_stds = r.f64s();
  out.values = r.matrix();
  r.expect_end();
  if (!out.terms.empty() && out.terms.size() != out.values.rows()) {
    fail(ErrorKind::Parse, path.string() + ": term list does not match matrix rows");
  }
  return out;
}

void WordClassMatrix::export_text(const std::filesystem::path& path) const {
  if (terms.size() != values.rows()) {
    fail(ErrorKind::Config, "word-class matrix has no term labels to export");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (std::size_t i = 0; i < values.rows(); ++i) {
    out << terms[i];
    for (const double x : values.row(i)) out << ' ' << text::format_g6(x);
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace wce
