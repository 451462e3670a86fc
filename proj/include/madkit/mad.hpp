#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "madkit/errors.hpp"
#include "madkit/factor_tables.hpp"
#include "madkit/quantiles.hpp"
#include "madkit/specfun.hpp"

namespace madkit {

/// Phi^{-1}(0.75): the asymptotic expected MAD_0 of a standard normal sample.
inline double asymptotic_mad() { return normal_quantile(0.75); }

/// C_inf = 1 / Phi^{-1}(0.75), approximately 1.4826.
inline double asymptotic_factor() { return 1.0 / asymptotic_mad(); }

/// Exact factor for n = 2, shared by every median estimator.
inline constexpr double kExactFactorTwo = 1.7724538509055160273;  // sqrt(pi)

/// Coefficients of A_n = alpha/n + beta/n^2 in
/// C_n = 1 / (Phi^{-1}(0.75) (1 + A_n)).
struct PredictionCoefficients {
  double alpha;
  double beta;
};

/// Least-squares coefficients for 100 < n <= 500.
inline constexpr PredictionCoefficients kFitSampleMedian{-0.7668, -2.1897};
inline constexpr PredictionCoefficients kFitHarrellDavis{-0.4912, -7.6350};
inline constexpr PredictionCoefficients kFitTrimmedHarrellDavisSqrt{-0.6954,
                                                                    -4.9261};
inline constexpr PredictionCoefficients kFitPark{-0.7591, -1.3239};

/// C_n from the prediction equation.
inline double predicted_factor(std::size_t n, PredictionCoefficients c) {
  const double dn = static_cast<double>(n);
  return 1.0 / (asymptotic_mad() * (1.0 + c.alpha / dn + c.beta / (dn * dn)));
}

/// Large-n forms for the Park scheme.
enum class ParkLargeN {
  HayesForm,    // A_n = -0.76213/n - 0.86413/n^2
  WilliamsForm  // A_n = -0.804168866 n^-1.008922
};

/// Source of bias-correction factors C_n.
///
/// Composite is the recommended default: sqrt(pi) at n = 2, the published
/// table for 3 <= n <= 100, and the prediction equation beyond. The remaining
/// historical schemes are for the sample median only and exist for
/// comparison.
struct FactorModel {
  enum class Scheme {
    Composite,
    Exact2,
    Table,
    Fitted,
    Asymptotic,
    CrouxRousseeuw,
    Williams,
    HayesParity,
    Park,
  };

  Scheme scheme = Scheme::Composite;
  /// Fitted: explicit coefficients; when absent the per-estimator defaults
  /// are used.
  std::optional<PredictionCoefficients> coefficients;
  /// Table: user-supplied rows; when empty the published table for the
  /// estimator is used.
  std::vector<tables::FactorEntry> user_table;
  ParkLargeN park_form = ParkLargeN::HayesForm;

  static FactorModel composite() { return {}; }
  static FactorModel exact2() { return of(Scheme::Exact2); }
  static FactorModel table() { return of(Scheme::Table); }
  static FactorModel table(std::vector<tables::FactorEntry> rows) {
    std::sort(rows.begin(), rows.end(),
              [](auto l, auto r) { return l.n < r.n; });
    FactorModel m = of(Scheme::Table);
    m.user_table = std::move(rows);
    return m;
  }
  static FactorModel fitted() { return of(Scheme::Fitted); }
  static FactorModel fitted(double alpha, double beta) {
    FactorModel m = of(Scheme::Fitted);
    m.coefficients = PredictionCoefficients{alpha, beta};
    return m;
  }
  static FactorModel asymptotic() { return of(Scheme::Asymptotic); }
  static FactorModel croux_rousseeuw() { return of(Scheme::CrouxRousseeuw); }
  static FactorModel williams() { return of(Scheme::Williams); }
  static FactorModel hayes() { return of(Scheme::HayesParity); }
  static FactorModel park(ParkLargeN form = ParkLargeN::HayesForm) {
    FactorModel m = of(Scheme::Park);
    m.park_form = form;
    return m;
  }

  std::string name() const {
    switch (scheme) {
      case Scheme::Composite: return "default";
      case Scheme::Exact2: return "exact2";
      case Scheme::Table: return "table";
      case Scheme::Fitted: return "fitted";
      case Scheme::Asymptotic: return "asymptotic";
      case Scheme::CrouxRousseeuw: return "croux-rousseeuw";
      case Scheme::Williams: return "williams";
      case Scheme::HayesParity: return "hayes";
      case Scheme::Park: return "park";
    }
    return {};
  }

 private:
  static FactorModel of(Scheme s) {
    FactorModel m;
    m.scheme = s;
    return m;
  }
};

/// Published factor table for a built-in estimator. Throws for THD with a
/// custom width, whose factors were never tabulated.
inline std::span<const tables::FactorEntry> published_table(
    const MedianEstimatorKind& kind) {
  switch (kind.tag()) {
    case MedianEstimatorKind::Tag::SampleMedian:
      return tables::kSampleMedian;
    case MedianEstimatorKind::Tag::HarrellDavis:
      return tables::kHarrellDavis;
    case MedianEstimatorKind::Tag::TrimmedHarrellDavis:
      if (kind.is_thd_sqrt()) return tables::kTrimmedHarrellDavisSqrt;
      break;
  }
  throw OutOfDomainError(
      "no published factors for " + kind.name() +
      "; supply a fitted or user table model for custom THD widths");
}

inline PredictionCoefficients default_coefficients(
    const MedianEstimatorKind& kind) {
  switch (kind.tag()) {
    case MedianEstimatorKind::Tag::SampleMedian:
      return kFitSampleMedian;
    case MedianEstimatorKind::Tag::HarrellDavis:
      return kFitHarrellDavis;
    case MedianEstimatorKind::Tag::TrimmedHarrellDavis:
      if (kind.is_thd_sqrt()) return kFitTrimmedHarrellDavisSqrt;
      break;
  }
  throw OutOfDomainError("no default prediction coefficients for " +
                         kind.name());
}

namespace detail {

inline std::optional<double> lookup(std::span<const tables::FactorEntry> rows,
                                    std::size_t n) {
  const auto it = std::lower_bound(
      rows.begin(), rows.end(), n,
      [](const tables::FactorEntry& e, std::size_t v) {
        return static_cast<std::size_t>(e.n) < v;
      });
  if (it == rows.end() || static_cast<std::size_t>(it->n) != n) {
    return std::nullopt;
  }
  return it->c;
}

inline double legacy_b_factor(std::size_t n,
                              std::span<const tables::FactorEntry> small,
                              double shift) {
  const double b = n <= 9 ? *lookup(small, n)
                          : static_cast<double>(n) /
                                (static_cast<double>(n) - shift);
  return b / asymptotic_mad();
}

}  // namespace detail

/// Bias-correction factor C_n for MAD built on `kind`.
inline double correction_factor(std::size_t n, const MedianEstimatorKind& kind,
                                 const FactorModel& model = {}) {
  using Scheme = FactorModel::Scheme;
  if (n < 2) throw SampleTooSmallError(n, 2);
  const double dn = static_cast<double>(n);

  switch (model.scheme) {
    case Scheme::Composite:
      if (!kind.is_thd_sqrt() &&
          kind.tag() == MedianEstimatorKind::Tag::TrimmedHarrellDavis) {
        throw OutOfDomainError(
            "default factors cover THD only with width 1/sqrt(n); supply a "
            "fitted or user table model for " + kind.name());
      }
      if (n == 2) return kExactFactorTwo;
      if (n <= 100) return *detail::lookup(published_table(kind), n);
      return predicted_factor(n, default_coefficients(kind));

    case Scheme::Exact2:
      if (n != 2) {
        throw OutOfDomainError("the exact factor exists only for n = 2");
      }
      return kExactFactorTwo;

    case Scheme::Table: {
      const auto rows = model.user_table.empty()
                            ? published_table(kind)
                            : std::span<const tables::FactorEntry>(
                                  model.user_table);
      if (auto c = detail::lookup(rows, n)) return *c;
      throw OutOfDomainError("n = " + std::to_string(n) +
                             " is not tabulated");
    }

    case Scheme::Fitted:
      return predicted_factor(
          n, model.coefficients ? *model.coefficients
                                : default_coefficients(kind));

    case Scheme::Asymptotic:
      return asymptotic_factor();

    case Scheme::CrouxRousseeuw:
      return detail::legacy_b_factor(n, tables::kCrouxRousseeuwB, 0.8);

    case Scheme::Williams:
      return detail::legacy_b_factor(n, tables::kWilliamsB, 0.801);

    case Scheme::HayesParity: {
      if (n < 9) {
        throw OutOfDomainError("the Hayes prediction equation needs n >= 9");
      }
      const bool odd = n % 2 == 1;
      const double alpha = odd ? 0.7635 : 0.7612;
      const double beta = odd ? 0.565 : 1.123;
      return 1.0 / (asymptotic_mad() * (1.0 - alpha / dn - beta / (dn * dn)));
    }

    case Scheme::Park: {
      if (n <= 100) return *detail::lookup(tables::kPark, n);
      const double a_n =
          model.park_form == ParkLargeN::HayesForm
              ? -0.76213 / dn - 0.86413 / (dn * dn)
              : -0.804168866 * std::pow(dn, -1.008922);
      return 1.0 / (asymptotic_mad() * (1.0 + a_n));
    }
  }
  throw OutOfDomainError("unknown factor scheme");
}

/// Uncorrected and corrected MAD of one sample.
struct MadValue {
  double uncorrected;
  double corrected;
  double factor_used;
  std::size_t n;
  MedianEstimatorKind estimator;
};

/// MAD_0 = median(|x - median(x)|) with a prepared estimator. `scratch` is
/// reused for the deviations.
inline double mad_uncorrected(std::span<const double> sorted,
                              const MedianEstimator& estimator,
                              std::vector<double>& scratch) {
  const double center = estimator(sorted);
  // Deviations left of the center are decreasing, right of it increasing:
  // merge the two runs instead of sorting.
  const auto split = static_cast<std::size_t>(
      std::lower_bound(sorted.begin(), sorted.end(), center) - sorted.begin());
  scratch.resize(sorted.size());
  std::size_t left = split;
  std::size_t right = split;
  for (double& out : scratch) {
    if (left == 0) {
      out = sorted[right++] - center;
    } else if (right == sorted.size()) {
      out = center - sorted[--left];
    } else {
      const double dl = center - sorted[left - 1];
      const double dr = sorted[right] - center;
      if (dl <= dr) {
        out = dl;
        --left;
      } else {
        out = dr;
        ++right;
      }
    }
  }
  return estimator(scratch);
}

/// MAD_0 of x. Rejects n < 2, where no finite correction factor exists.
inline double mad_uncorrected(const Sample& x,
                              const MedianEstimatorKind& kind) {
  if (x.size() < 2) throw SampleTooSmallError(x.size(), 2);
  std::vector<double> scratch;
  return mad_uncorrected(x.sorted(), MedianEstimator(kind, x.size()), scratch);
}

/// MAD_n = C_n * MAD_0.
inline MadValue mad_corrected(const Sample& x, const MedianEstimatorKind& kind,
                              const FactorModel& model = {}) {
  if (x.size() < 2) throw SampleTooSmallError(x.size(), 2);
  const double factor = correction_factor(x.size(), kind, model);
  const double raw = mad_uncorrected(x, kind);
  return {raw, factor * raw, factor, x.size(), kind};
}

/// Corrected MAD for repeated samples of one size; owns its weights and
/// scratch space, so give each thread its own instance.
class MadEstimator {
 public:
  MadEstimator(MedianEstimatorKind kind, std::size_t n,
               const FactorModel& model = {})
      : estimator_(kind, n), factor_(correction_factor(n, kind, model)) {}

  double uncorrected(std::span<const double> sorted) {
    return mad_uncorrected(sorted, estimator_, scratch_);
  }
  double corrected(std::span<const double> sorted) {
    return factor_ * uncorrected(sorted);
  }
  double factor() const noexcept { return factor_; }

 private:
  MedianEstimator estimator_;
  double factor_;
  std::vector<double> scratch_;
};

}  // namespace madkit
