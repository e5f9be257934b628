#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wce/matrix.hpp"

namespace wce {

struct Contingency {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

/// Per-class contingency tables from 0/1 matrices (documents x classes).
std::vector<Contingency> contingencies(const Matrix& truth, const Matrix& predicted);

/// 2tp / (2tp + fp + fn); 1 when tp = fp = fn = 0.
double f1_binary(const Contingency& c);
/// F1 of the counts pooled across classes.
double micro_f1(std::span<const Contingency> cs);
/// Unweighted mean of per-class F1.
double macro_f1(std::span<const Contingency> cs);

struct F1Scores {
  double macro = 0.0;
  double micro = 0.0;
  std::vector<double> per_class;
};

F1Scores f1_scores(const Matrix& truth, const Matrix& predicted);

struct TTestResult {
  double t = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
  double mean_difference = 0.0;
  bool significant_05 = false;
  bool significant_005 = false;
};

/// Two-tailed paired t-test. Zero variance of the differences gives p = 1
/// when the mean difference is zero and p = 0 otherwise.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Two-tailed tail probability P(|T| >= |t|) for Student's t with df degrees.
double student_t_two_tailed(double t, double df);

}  // namespace wce
