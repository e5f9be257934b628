#include "wce/eval.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "wce/error.hpp"

namespace wce {

std::vector<Contingency> contingencies(const Matrix& truth, const Matrix& predicted) {
  if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols()) {
    fail(ErrorKind::Dimension, "contingencies: truth and prediction shapes differ");
  }
  std::vector<Contingency> cs(truth.cols());
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    for (std::size_t j = 0; j < truth.cols(); ++j) {
      const bool y = truth(i, j) != 0.0;
      const bool p = predicted(i, j) != 0.0;
      auto& c = cs[j];
      if (y && p) ++c.tp;
      else if (!y && p) ++c.fp;
      else if (y && !p) ++c.fn;
      else ++c.tn;
    }
  }
  return cs;
}

double f1_binary(const Contingency& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double micro_f1(std::span<const Contingency> cs) {
  if (cs.empty()) fail(ErrorKind::Config, "micro_f1 needs at least one class");
  Contingency pooled;
  for (const auto& c : cs) {
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.fn += c.fn;
    pooled.tn += c.tn;
  }
  return f1_binary(pooled);
}

double macro_f1(std::span<const Contingency> cs) {
  if (cs.empty()) fail(ErrorKind::Config, "macro_f1 needs at least one class");
  double sum = 0.0;
  for (const auto& c : cs) sum += f1_binary(c);
  return sum / static_cast<double>(cs.size());
}

F1Scores f1_scores(const Matrix& truth, const Matrix& predicted) {
  const auto cs = contingencies(truth, predicted);
  F1Scores s;
  s.macro = macro_f1(cs);
  s.micro = micro_f1(cs);
  s.per_class.reserve(cs.size());
  for (const auto& c : cs) s.per_class.push_back(f1_binary(c));
  return s;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) fail(ErrorKind::Config, "incomplete_beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
  if (df <= 0.0) fail(ErrorKind::Config, "degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::Config, "paired_ttest: lists differ in length");
  if (a.size() < 2) fail(ErrorKind::Config, "paired_ttest needs at least 2 paired scores");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  TTestResult res;
  res.degrees_of_freedom = n - 1.0;
  res.mean_difference = mean;
  if (sd == 0.0) {
    if (mean == 0.0) {
      res.t = 0.0;
      res.p_value = 1.0;
    } else {
      res.t = mean > 0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
      res.p_value = 0.0;
    }
  } else {
    res.t = mean / (sd / std::sqrt(n));
    res.p_value = student_t_two_tailed(res.t, res.degrees_of_freedom);
  }
  res.significant_05 = res.p_value < 0.05;
  res.significant_005 = res.p_value < 0.005;
  return res;
}

}  // namespace wce
