#pragma once

#include <vector>

namespace cogflex {

// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// P(|T| > |t|) for Student's t with nu degrees of freedom:
// I_{nu / (nu + t^2)}(nu / 2, 1/2).
double student_t_two_sided_p(double t, int nu);

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;
  double t = 0.0;  // t = r sqrt((k - 2) / (1 - r^2))
  int count = 0;
};

// Needs k >= 3 points and nonzero variance on both sides.
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

// Quartiles use linear interpolation between order statistics (the common
// spreadsheet definition); stddev is the sample standard deviation.
struct DistributionSummary {
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

DistributionSummary summarize_distribution(const std::vector<double>& values);

}  // namespace cogflex
