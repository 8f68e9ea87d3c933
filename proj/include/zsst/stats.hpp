#pragma once

#include <span>

namespace zsst {

double mean(std::span<const double> values);

// Sample standard deviation with the n-1 denominator. A single value has
// stddev 0 by convention.
double sample_stddev(std::span<const double> values);

// sample_stddev / sqrt(n).
double standard_error(std::span<const double> values);

// Regularized incomplete beta I_x(a, b), evaluated with the standard
// continued fraction (modified Lentz). Accurate to ~1e-12 for the a, b
// ranges a t-test needs.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p value of a t statistic with df degrees of freedom:
// p = I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  double mean_diff = 0.0;
};

// Two-sided paired t-test over a_i - b_i. Throws ValidationError on length
// mismatch or fewer than two pairs, DegenerateResultError when the
// differences have zero variance.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

}  // namespace zsst
