#include "zsst/stats.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "zsst/errors.hpp"

namespace zsst {
namespace {

// Continued fraction for I_x(a, b), modified Lentz iteration.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
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
    double num = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;

    num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw InternalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double mean(std::span<const double> values) {
  if (values.empty()) {
    throw ValidationError("mean of an empty sample");
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.empty()) {
    throw ValidationError("stddev of an empty sample");
  }
  if (values.size() == 1) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double standard_error(std::span<const double> values) {
  return sample_stddev(values) / std::sqrt(static_cast<double>(values.size()));
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw ValidationError("incomplete beta needs positive shape parameters");
  }
  if (x < 0.0 || x > 1.0) {
    throw ValidationError("incomplete beta argument outside [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  // x^a (1-x)^b / B(a,b) is symmetric under (a,b,x) -> (b,a,1-x), so one
  // front factor serves both branches. The continued fraction converges
  // fast for x < (a+1)/(a+b+2); the symmetry covers the rest.
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) {
    throw ValidationError("degrees of freedom must be positive");
  }
  if (std::isinf(t)) return 0.0;
  if (!std::isfinite(t)) {
    throw ValidationError("t statistic is not finite");
  }
  const double x = df / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

TTestResult paired_ttest(std::span<const double> a,
                         std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("paired t-test needs equal-length samples, got " +
                          std::to_string(a.size()) + " and " +
                          std::to_string(b.size()));
  }
  if (a.size() < 2) {
    throw ValidationError("paired t-test needs at least two pairs");
  }
  std::vector<double> diffs(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];

  TTestResult result;
  result.mean_diff = mean(diffs);
  result.df = static_cast<double>(diffs.size() - 1);
  const double sd = sample_stddev(diffs);
  if (sd == 0.0) {
    throw DegenerateResultError(
        "paired t-test differences have zero variance");
  }
  result.t = result.mean_diff /
             (sd / std::sqrt(static_cast<double>(diffs.size())));
  result.p = student_t_two_sided_p(result.t, result.df);
  return result;
}

}  // namespace zsst
