#ifndef MACA_HARNESS_STATS_H_
#define MACA_HARNESS_STATS_H_

#include <span>
#include <string>
#include <vector>

namespace maca::harness {

inline constexpr double kSignificanceLevel = 0.05;

// I_x(a, b) by continued fraction.
double RegularizedIncompleteBeta(double x, double a, double b);

// Two-sided p-value of Student's t with `df` degrees of freedom.
double StudentTwoSidedP(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool significant = false;  // p < kSignificanceLevel
};

// Two-sample t-test, pooled variance by default. A zero standard error gives
// p = 1 for equal means and p = 0 otherwise. Throws std::invalid_argument
// when either sample has fewer than two values.
TTestResult TTest(std::span<const double> a, std::span<const double> b,
                  bool welch = false);

double Mean(std::span<const double> values);
// Sample standard deviation (n - 1); zero for fewer than two values.
double StdDev(std::span<const double> values);

struct VariantSamples {
  std::string name;
  std::vector<double> samples;
};

// Variants whose samples are not significantly worse than the best-mean
// variant; p >= kSignificanceLevel counts as not significant. Variants with
// fewer than two samples cannot be tested and are kept. Aligned with input.
std::vector<bool> BoldMask(const std::vector<VariantSamples>& variants,
                           bool welch = false);

}  // namespace maca::harness

#endif  // MACA_HARNESS_STATS_H_
