#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "madkit/errors.hpp"

namespace madkit {

/// A real number in [0, 1].
class Probability {
 public:
  explicit Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw DomainError("probability must lie in [0, 1], got " +
                        std::to_string(value));
    }
  }

  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

 private:
  double value_;
};

/// Shape parameters of a Beta distribution; both strictly positive.
class BetaParams {
 public:
  BetaParams(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!(alpha > 0.0 && beta > 0.0) || !std::isfinite(alpha) ||
        !std::isfinite(beta)) {
      throw DomainError("beta parameters must be positive and finite");
    }
  }

  /// Parameters of the Harrell-Davis weight distribution for quantile p of a
  /// sample of size n: ((n+1)p, (n+1)(1-p)).
  static BetaParams for_quantile(std::size_t n, double p) {
    const double m = static_cast<double>(n) + 1.0;
    return BetaParams(m * p, m * (1.0 - p));
  }

  constexpr double alpha() const noexcept { return alpha_; }
  constexpr double beta() const noexcept { return beta_; }
  constexpr bool symmetric() const noexcept { return alpha_ == beta_; }

 private:
  double alpha_;
  double beta_;
};

namespace detail {

// lgamma(x) minus its Stirling approximation; valid for x >= 10.
inline double stirling_correction(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  return r *
         (1.0 / 12.0 -
          r2 * (1.0 / 360.0 -
                r2 * (1.0 / 1260.0 -
                      r2 * (1.0 / 1680.0 -
                            r2 * (1.0 / 1188.0 -
                                  r2 * (691.0 / 360360.0 - r2 / 156.0))))));
}

// log( x^a (1-x)^b / B(a, b) ) for 0 < x < 1.
//
// For large shapes lgamma-based log B(a,b) loses about a*eps to cancellation,
// so the Stirling form is expanded around the mean a/(a+b) instead.
inline double log_beta_kernel(double x, double a, double b) {
  if (a >= 10.0 && b >= 10.0) {
    const double s = a + b;
    const double d = std::fma(x, s, -a);  // x(a+b) - a
    return a * std::log1p(d / a) + b * std::log1p(-d / b) +
           0.5 * std::log(a / s * b) - 0.5 * std::log(2.0 * std::numbers::pi) -
           stirling_correction(a) - stirling_correction(b) +
           stirling_correction(s);
  }
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return a * std::log(x) + b * std::log1p(-x) - log_beta;
}

// Continued fraction for I_x(a,b), modified Lentz evaluation.
inline double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIterations = 100000;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
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
    if (std::fabs(del - 1.0) <= kEpsilon) return h;
  }
  return h;
}

inline void check_unit_interval(double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError("argument must lie in [0, 1], got " + std::to_string(v));
  }
}

}  // namespace detail

/// Regularized incomplete beta function I_v(alpha, beta), i.e. the CDF of
/// Beta(alpha, beta) at v.
inline Probability reg_inc_beta(double v, const BetaParams& params) {
  detail::check_unit_interval(v);
  const double a = params.alpha();
  const double b = params.beta();
  if (v == 0.0) return Probability(0.0);
  if (v == 1.0) return Probability(1.0);
  if (a == b && v == 0.5) return Probability(0.5);

  double result;
  if (v < (a + 1.0) / (a + b + 2.0)) {
    result = std::exp(detail::log_beta_kernel(v, a, b)) *
             detail::beta_continued_fraction(v, a, b) / a;
  } else {
    const double w = 1.0 - v;
    result = 1.0 - std::exp(detail::log_beta_kernel(w, b, a)) *
                       detail::beta_continued_fraction(w, b, a) / b;
  }
  return Probability(std::clamp(result, 0.0, 1.0));
}

/// Density of Beta(alpha, beta) at v. Returns +inf at a boundary where the
/// density diverges (alpha < 1 at 0, beta < 1 at 1).
inline double beta_pdf(double v, const BetaParams& params) {
  detail::check_unit_interval(v);
  const double a = params.alpha();
  const double b = params.beta();
  auto boundary = [](double shape, double other) {
    if (shape < 1.0) return std::numeric_limits<double>::infinity();
    if (shape > 1.0) return 0.0;
    return other;  // 1 / B(1, other)
  };
  if (v == 0.0) return boundary(a, b);
  if (v == 1.0) return boundary(b, a);
  return std::exp(detail::log_beta_kernel(v, a, b) - std::log(v) -
                  std::log1p(-v));
}

/// Standard normal CDF.
inline Probability normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("normal_cdf of NaN");
  return Probability(0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0));
}

namespace detail {

// Acklam's rational approximation (relative error ~1.15e-9) for p <= 0.5.
inline double acklam_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;

  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Standard normal quantile function. Rejects p = 0 and p = 1.
inline double normal_quantile(Probability p) {
  if (p.value() == 0.0 || p.value() == 1.0) {
    throw DomainError("normal quantile is infinite at p = 0 and p = 1");
  }
  // Work in the lower half; 1 - p is exact for p in [0.5, 1).
  const bool upper = p.value() > 0.5;
  const double lower = upper ? 1.0 - p.value() : p.value();
  if (lower == 0.5) return 0.0;

  double x = detail::acklam_lower(lower);
  const double density =
      std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  x -= (normal_cdf(x).value() - lower) / density;
  return upper ? -x : x;
}

inline double normal_quantile(double p) {
  return normal_quantile(Probability(p));
}

}  // namespace madkit
