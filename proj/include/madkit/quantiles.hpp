#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "madkit/errors.hpp"
#include "madkit/specfun.hpp"

namespace madkit {

/// Finite observations, sorted ascending once at construction.
class Sample {
 public:
  Sample() = default;

  explicit Sample(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw DomainError("sample element " + std::to_string(i) +
                          " is not finite");
      }
    }
    std::sort(values_.begin(), values_.end());
  }

  Sample(std::initializer_list<double> values)
      : Sample(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Order statistics, ascending.
  std::span<const double> sorted() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

 private:
  std::vector<double> values_;
};

/// Which median estimator a MAD is built on.
class MedianEstimatorKind {
 public:
  enum class Tag { SampleMedian, HarrellDavis, TrimmedHarrellDavis };

  static MedianEstimatorKind sm() { return {Tag::SampleMedian, std::nullopt}; }
  static MedianEstimatorKind hd() { return {Tag::HarrellDavis, std::nullopt}; }
  /// Trimmed Harrell-Davis with HDI width 1/sqrt(n), resolved per sample.
  static MedianEstimatorKind thd_sqrt() {
    return {Tag::TrimmedHarrellDavis, std::nullopt};
  }
  static MedianEstimatorKind thd(double width) {
    if (!(width > 0.0 && width <= 1.0)) {
      throw DomainError("THD width must lie in (0, 1], got " +
                        std::to_string(width));
    }
    return {Tag::TrimmedHarrellDavis, width};
  }

  /// Parses "sm", "hd", "thd-sqrt" or "thd:<width>" (case-insensitive).
  static MedianEstimatorKind parse(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (text == "sm") return sm();
    if (text == "hd") return hd();
    if (text == "thd-sqrt" || text == "thd_sqrt" || text == "thd") {
      return thd_sqrt();
    }
    if (text.starts_with("thd:")) {
      std::size_t used = 0;
      const std::string number = text.substr(4);
      double width = 0.0;
      try {
        width = std::stod(number, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != number.size()) {
        throw DomainError("bad THD width in '" + text + "'");
      }
      return thd(width);
    }
    throw DomainError("unknown estimator '" + text +
                      "' (expected sm, hd, thd-sqrt or thd:<width>)");
  }

  Tag tag() const noexcept { return tag_; }
  bool is_thd_sqrt() const noexcept {
    return tag_ == Tag::TrimmedHarrellDavis && !width_;
  }
  /// Custom THD width, if one was given.
  std::optional<double> width() const noexcept { return width_; }

  /// HDI width used for a sample of size n (THD only).
  double resolve_width(std::size_t n) const {
    return width_ ? *width_ : 1.0 / std::sqrt(static_cast<double>(n));
  }

  std::string name() const {
    switch (tag_) {
      case Tag::SampleMedian:
        return "SM";
      case Tag::HarrellDavis:
        return "HD";
      case Tag::TrimmedHarrellDavis:
        if (!width_) return "THD-SQRT";
        char buf[32];
        std::snprintf(buf, sizeof buf, "THD:%g", *width_);
        return buf;
    }
    return {};
  }

  friend bool operator==(const MedianEstimatorKind&,
                         const MedianEstimatorKind&) = default;

 private:
  MedianEstimatorKind(Tag tag, std::optional<double> width)
      : tag_(tag), width_(width) {}

  Tag tag_;
  std::optional<double> width_;
};

/// A highest density interval [lower, upper] of requested width.
struct HdiWindow {
  double lower;
  double upper;
  double width;
};

/// Per-order-statistic weights of a weighted-sum quantile estimator.
struct QuantileWeights {
  std::vector<double> weights;
  BetaParams params;
  std::optional<HdiWindow> hdi;
};

namespace detail {

inline void check_open_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("quantile probability must lie in (0, 1), got " +
                      std::to_string(p));
  }
}

inline void check_width(double width) {
  if (!(width > 0.0 && width <= 1.0)) {
    throw DomainError("HDI width must lie in (0, 1], got " +
                      std::to_string(width));
  }
}

inline double dot(std::span<const double> weights,
                  std::span<const double> sorted) {
  double sum = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) sum += weights[i] * sorted[i];
  return sum;
}

}  // namespace detail

/// Hyndman-Fan type 7 quantile of sorted data.
inline double hf7_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw EmptySampleError();
  detail::check_unit_interval(p);
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * p + 1.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo >= n) return sorted[n - 1];
  return sorted[lo - 1] + (h - static_cast<double>(lo)) *
                              (sorted[lo] - sorted[lo - 1]);
}

inline double hf7_quantile(const Sample& x, Probability p) {
  return hf7_quantile(x.sorted(), p.value());
}

/// Middle order statistic, or the mean of the two middle ones for even n.
inline double sample_median(std::span<const double> sorted) {
  if (sorted.empty()) throw EmptySampleError();
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

/// Harrell-Davis weights: W_i = I_{i/n}(a, b) - I_{(i-1)/n}(a, b).
inline QuantileWeights hd_weights(std::size_t n, double p) {
  if (n == 0) throw EmptySampleError();
  detail::check_open_probability(p);
  const BetaParams params = BetaParams::for_quantile(n, p);
  std::vector<double> weights(n);
  double previous = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double v = static_cast<double>(i) / static_cast<double>(n);
    const double current = reg_inc_beta(v, params);
    weights[i - 1] = std::max(0.0, current - previous);
    previous = current;
  }
  return {std::move(weights), params, std::nullopt};
}

/// Highest density interval of the given width for Beta(alpha, beta).
/// Returns nullopt in the degenerate case (alpha, beta both <= 1), where no
/// unimodal interior HDI exists.
inline std::optional<HdiWindow> beta_hdi(const BetaParams& params,
                                         double width) {
  detail::check_width(width);
  constexpr double kEps = 1e-9;
  const double a = params.alpha();
  const double b = params.beta();

  if (a < 1.0 + kEps && b < 1.0 + kEps) return std::nullopt;
  if (a < 1.0 + kEps && b > 1.0) return HdiWindow{0.0, width, width};
  if (a > 1.0 && b < 1.0 + kEps) return HdiWindow{1.0 - width, 1.0, width};
  if (width > 1.0 - kEps) return HdiWindow{0.0, 1.0, 1.0};
  if (params.symmetric()) {
    return HdiWindow{0.5 - width / 2.0, 0.5 + width / 2.0, width};
  }

  // pdf(l) = pdf(l + width); f(l) = pdf(l) - pdf(l + width) is negative at
  // the lower bracket end and positive at the upper one.
  const double mode = (a - 1.0) / (a + b - 2.0);
  double lo = std::max(0.0, mode - width);
  double hi = std::min(mode, 1.0 - width);
  if (hi > lo) {
    auto f = [&](double l) {
      return beta_pdf(l, params) - beta_pdf(std::min(1.0, l + width), params);
    };
    while (true) {
      const double mid = lo + (hi - lo) / 2.0;
      if (mid <= lo || mid >= hi) break;
      if (f(mid) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  return HdiWindow{lo, std::min(1.0, lo + width), width};
}

/// Trimmed Harrell-Davis weights: consecutive differences of the Beta CDF
/// clamped to the HDI [L, R] and renormalized. Falls back to plain HD weights
/// when the HDI is degenerate.
inline QuantileWeights thd_weights(std::size_t n, double p, double width) {
  if (n == 0) throw EmptySampleError();
  detail::check_open_probability(p);
  detail::check_width(width);
  const BetaParams params = BetaParams::for_quantile(n, p);
  const std::optional<HdiWindow> hdi = beta_hdi(params, width);
  if (!hdi) return hd_weights(n, p);

  const double lower = hdi->lower;
  const double upper = hdi->upper;
  const double cdf_lower = reg_inc_beta(lower, params);
  const double cdf_upper = reg_inc_beta(upper, params);
  const double mass = cdf_upper - cdf_lower;
  // With a symmetric window I(L) + I(R) = 1, so centring on 1/2 keeps
  // F(1/2) = 1/2 exact.
  auto clamped_cdf = [&](double v) {
    if (v <= lower) return 0.0;
    if (v >= upper) return 1.0;
    const double cdf = reg_inc_beta(v, params);
    if (params.symmetric()) return 0.5 + (cdf - 0.5) / mass;
    return (cdf - cdf_lower) / mass;
  };

  const double dn = static_cast<double>(n);
  const auto first = static_cast<std::size_t>(std::floor(lower * dn));
  const auto last =
      std::min(n, static_cast<std::size_t>(std::ceil(upper * dn)));
  std::vector<double> weights(n, 0.0);
  double previous = clamped_cdf(static_cast<double>(first) / dn);
  for (std::size_t i = first + 1; i <= last; ++i) {
    const double current = clamped_cdf(static_cast<double>(i) / dn);
    weights[i - 1] = std::max(0.0, current - previous);
    previous = current;
  }
  return {std::move(weights), params, hdi};
}

inline double hd_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw EmptySampleError();
  detail::check_open_probability(p);
  if (sorted.size() == 1) return sorted[0];
  return detail::dot(hd_weights(sorted.size(), p).weights, sorted);
}

inline double hd_quantile(const Sample& x, Probability p) {
  return hd_quantile(x.sorted(), p.value());
}

inline double thd_quantile(std::span<const double> sorted, double p,
                           double width) {
  if (sorted.empty()) throw EmptySampleError();
  detail::check_open_probability(p);
  detail::check_width(width);
  if (sorted.size() == 1) return sorted[0];
  return detail::dot(thd_weights(sorted.size(), p, width).weights, sorted);
}

inline double thd_quantile(const Sample& x, Probability p, double width) {
  return thd_quantile(x.sorted(), p.value(), width);
}

/// THD quantile with the default width 1/sqrt(n).
inline double thd_quantile(const Sample& x, Probability p) {
  if (x.empty()) throw EmptySampleError();
  return thd_quantile(x.sorted(), p.value(),
                      1.0 / std::sqrt(static_cast<double>(x.size())));
}

/// A median estimator bound to one sample size, with its weights computed
/// once. Used wherever many samples of the same size are processed.
class MedianEstimator {
 public:
  MedianEstimator(MedianEstimatorKind kind, std::size_t n)
      : kind_(std::move(kind)), n_(n) {
    if (n == 0) throw EmptySampleError();
    switch (kind_.tag()) {
      case MedianEstimatorKind::Tag::SampleMedian:
        break;
      case MedianEstimatorKind::Tag::HarrellDavis:
        weights_ = hd_weights(n, 0.5).weights;
        break;
      case MedianEstimatorKind::Tag::TrimmedHarrellDavis:
        weights_ = thd_weights(n, 0.5, kind_.resolve_width(n)).weights;
        break;
    }
  }

  const MedianEstimatorKind& kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return n_; }
  std::span<const double> weights() const noexcept { return weights_; }

  double operator()(std::span<const double> sorted) const {
    if (sorted.size() != n_) {
      throw DomainError("estimator prepared for n=" + std::to_string(n_) +
                        " applied to n=" + std::to_string(sorted.size()));
    }
    if (kind_.tag() == MedianEstimatorKind::Tag::SampleMedian) {
      return sample_median(sorted);
    }
    return detail::dot(weights_, sorted);
  }

 private:
  MedianEstimatorKind kind_;
  std::size_t n_;
  std::vector<double> weights_;
};

/// Median of x under the given estimator.
inline double median(const Sample& x, const MedianEstimatorKind& kind) {
  if (x.empty()) throw EmptySampleError();
  return MedianEstimator(kind, x.size())(x.sorted());
}

}  // namespace madkit
