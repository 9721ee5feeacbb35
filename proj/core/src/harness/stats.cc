#include "maca/harness/stats.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace maca::harness {

namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double BetaContinuedFraction(double x, double a, double b) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
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
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

}  // namespace

double RegularizedIncompleteBeta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("incomplete beta: shape parameters must be positive");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("incomplete beta: x must lie in [0, 1]");
  }
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * BetaContinuedFraction(x, a, b) / a;
  return 1.0 - front * BetaContinuedFraction(1.0 - x, b, a) / b;
}

double StudentTwoSidedP(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("t distribution: df must be positive");
  if (std::isinf(t)) return 0.0;
  return RegularizedIncompleteBeta(df / (df + t * t), 0.5 * df, 0.5);
}

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double StdDev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

TTestResult TTest(std::span<const double> a, std::span<const double> b, bool welch) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("t-test: each sample needs at least two values");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = Mean(a), mb = Mean(b);
  const double va = StdDev(a) * StdDev(a), vb = StdDev(b) * StdDev(b);
  TTestResult out;
  double se2 = 0.0;
  if (welch) {
    se2 = va / na + vb / nb;
    const double num = se2 * se2;
    const double den = (va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0);
    out.df = den > 0.0 ? num / den : na + nb - 2.0;
  } else {
    out.df = na + nb - 2.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / out.df;
    se2 = pooled * (1.0 / na + 1.0 / nb);
  }
  if (!(se2 > 0.0)) {
    if (ma == mb) {
      out.t = 0.0;
      out.p = 1.0;
    } else {
      out.t = ma > mb ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
      out.p = 0.0;
    }
  } else {
    out.t = (ma - mb) / std::sqrt(se2);
    out.p = StudentTwoSidedP(out.t, out.df);
  }
  out.significant = out.p < kSignificanceLevel;
  return out;
}

std::vector<bool> BoldMask(const std::vector<VariantSamples>& variants, bool welch) {
  std::vector<bool> mask(variants.size(), false);
  if (variants.empty()) return mask;
  size_t best = 0;
  for (size_t k = 1; k < variants.size(); ++k) {
    if (Mean(variants[k].samples) > Mean(variants[best].samples)) best = k;
  }
  for (size_t k = 0; k < variants.size(); ++k) {
    if (k == best || variants[k].samples.size() < 2 ||
        variants[best].samples.size() < 2) {
      mask[k] = true;
      continue;
    }
    mask[k] = !TTest(variants[best].samples, variants[k].samples, welch).significant;
  }
  return mask;
}

}  // namespace maca::harness
