#include "cogflex/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cogflex/errors.hpp"

namespace cogflex {

namespace {

// Lentz's algorithm for the incomplete-beta continued fraction.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw ValidationError("incomplete beta needs positive shape parameters");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError("incomplete beta needs x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // Continued fraction converges fast for x < (a + 1) / (a + b + 2).
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int nu) {
  if (nu < 1) throw ValidationError("student t needs nu >= 1");
  if (std::isinf(t)) return 0.0;
  const double x = nu / (nu + t * t);
  return regularized_incomplete_beta(nu / 2.0, 0.5, x);
}

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw ValidationError("pearson needs vectors of equal length");
  }
  const int k = static_cast<int>(x.size());
  if (k < 3) throw ValidationError("pearson needs at least 3 points");

  double mx = 0.0, my = 0.0;
  for (int i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < k; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ValidationError("pearson undefined for zero-variance input");
  }

  PearsonResult res;
  res.count = k;
  res.r = sxy / std::sqrt(sxx * syy);
  res.r = std::clamp(res.r, -1.0, 1.0);
  const double denom = 1.0 - res.r * res.r;
  res.t = denom <= 0.0 ? std::numeric_limits<double>::infinity()
                       : res.r * std::sqrt((k - 2) / denom);
  res.p = student_t_two_sided_p(res.t, k - 2);
  return res;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("least squares needs two equal-length samples");
  }
  const int k = static_cast<int>(x.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < k; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ValidationError("least squares undefined for constant x");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
  const std::size_t n = v.size();
  if (n == 1) return v[0];
  const double h = p * (n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return v[n - 1];
  const double frac = h - lo;
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace

DistributionSummary summarize_distribution(const std::vector<double>& values) {
  if (values.empty()) {
    throw ValidationError("cannot summarize an empty sample");
  }
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());

  DistributionSummary s;
  s.count = static_cast<int>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / s.count;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile_sorted(v, 0.25);
  s.median = quantile_sorted(v, 0.5);
  s.q3 = quantile_sorted(v, 0.75);
  return s;
}

}  // namespace cogflex
