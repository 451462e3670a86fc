#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "madkit/distributions.hpp"
#include "madkit/errors.hpp"
#include "madkit/mad.hpp"
#include "madkit/quantiles.hpp"
#include "madkit/rng.hpp"

namespace madkit {

/// Shared settings of the Monte-Carlo studies.
struct SimulationConfig {
  std::vector<std::size_t> sample_sizes;
  /// Unset means the study default: 10^6 factors, 10^4 efficiency,
  /// 10^3 sensitivity.
  std::optional<std::size_t> repetitions;
  std::uint64_t master_seed = 0;
  std::vector<MedianEstimatorKind> estimators = {MedianEstimatorKind::sm(),
                                                 MedianEstimatorKind::hd(),
                                                 MedianEstimatorKind::thd_sqrt()};
  /// Sensitivity study only.
  std::vector<DistributionSpec> distributions;
  /// Repetitions per independently seeded chunk. Part of the result: a
  /// different chunk size gives different (equally valid) draws.
  std::size_t chunk_size = 10000;
  /// Worker cap; 0 picks the hardware concurrency. Never affects results.
  unsigned threads = 0;
};

struct FactorRow {
  std::size_t n;
  MedianEstimatorKind estimator;
  double m_n;
  double c_n;
  double std_error;
  std::size_t repetitions;
};

struct FactorReport {
  std::vector<FactorRow> rows;
};

struct EfficiencyRow {
  std::size_t n;
  double var_sm;
  std::optional<double> var_hd;
  std::optional<double> var_thd;
  std::optional<double> e_hd;
  std::optional<double> e_thd;
};

struct EfficiencyReport {
  std::vector<EfficiencyRow> rows;
};

enum class Aggregator { SD, IQR, MadSM };

inline std::string to_string(Aggregator a) {
  switch (a) {
    case Aggregator::SD: return "SD";
    case Aggregator::IQR: return "IQR";
    case Aggregator::MadSM: return "MAD_SM";
  }
  return {};
}

struct SensitivityRow {
  DistributionSpec distribution;
  std::size_t n;
  MedianEstimatorKind estimator;
  Aggregator aggregator;
  double dispersion;
};

struct SensitivityReport {
  std::vector<SensitivityRow> rows;
};

struct FitResult {
  std::string estimator;
  double alpha;
  double beta;
  double residual_max;
  std::size_t n_low;   // exclusive
  std::size_t n_high;  // inclusive
};

namespace detail {

enum class Study : std::uint64_t { Factors = 1, Efficiency = 2, Sensitivity = 3 };

inline std::size_t repetitions_or(const SimulationConfig& c,
                                  std::size_t fallback) {
  return c.repetitions.value_or(fallback);
}

inline void validate(const SimulationConfig& c, std::size_t reps) {
  if (c.sample_sizes.empty()) throw ConfigError("no sample sizes given");
  for (auto n : c.sample_sizes) {
    if (n < 2) throw ConfigError("sample sizes must be at least 2");
  }
  if (reps < 100) throw ConfigError("repetitions must be at least 100");
  if (c.chunk_size == 0) throw ConfigError("chunk size must be positive");
  if (c.estimators.empty()) throw ConfigError("no estimators given");
}

// Stable stream component for an estimator.
inline std::uint64_t estimator_code(const MedianEstimatorKind& kind) {
  switch (kind.tag()) {
    case MedianEstimatorKind::Tag::SampleMedian: return 0;
    case MedianEstimatorKind::Tag::HarrellDavis: return 1;
    case MedianEstimatorKind::Tag::TrimmedHarrellDavis:
      if (kind.is_thd_sqrt()) return 2;
      return stream_id(3, std::bit_cast<std::uint64_t>(*kind.width()));
  }
  return 0;
}

// FNV-1a; the distribution's stream component must not depend on
// std::hash, which varies across standard libraries.
inline std::uint64_t text_code(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Runs task(i) for i in [0, count) on up to `threads` workers and returns
/// the results indexed by i; the first exception is rethrown.
template <typename Task>
auto parallel_map(std::size_t count, unsigned threads, Task task)
    -> std::vector<decltype(task(std::size_t{}))> {
  using Result = decltype(task(std::size_t{}));
  std::vector<std::optional<Result>> slots(count);
  unsigned workers = threads ? threads : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(
      std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        slots[i].emplace(task(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Result> out;
  out.reserve(count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

/// Running count, compensated sum and centered second moment.
struct Moments {
  std::size_t count = 0;
  double sum = 0.0;
  double compensation = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    // Neumaier summation for the mean, Welford for the spread.
    const double t = sum + x;
    compensation += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x
                                                   : (x - t) + sum;
    sum = t;
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double t = sum + o.sum;
    compensation += (std::fabs(sum) >= std::fabs(o.sum) ? (sum - t) + o.sum
                                                        : (o.sum - t) + sum) +
                    o.compensation;
    sum = t;
    const double total = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(count) *
                     static_cast<double>(o.count) / total;
    count += o.count;
  }

  double total() const { return sum + compensation; }
  double compensated_mean() const {
    return total() / static_cast<double>(count);
  }
  double variance() const { return m2 / static_cast<double>(count - 1); }
};

struct ChunkPlan {
  std::size_t combo;
  std::size_t chunk;
  std::size_t begin;
  std::size_t size;
};

inline std::vector<ChunkPlan> plan_chunks(std::size_t combos, std::size_t reps,
                                          std::size_t chunk_size) {
  std::vector<ChunkPlan> plan;
  const std::size_t chunks = (reps + chunk_size - 1) / chunk_size;
  for (std::size_t k = 0; k < combos; ++k) {
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = c * chunk_size;
      plan.push_back({k, c, begin, std::min(chunk_size, reps - begin)});
    }
  }
  return plan;
}

inline const DistributionSpec& standard_normal() {
  static const DistributionSpec spec = dist::Normal{0.0, 1.0};
  return spec;
}

inline void draw_sorted(const DistributionSpec& spec, Variates& v,
                        std::vector<double>& x) {
  for (double& xi : x) xi = spec.draw(v);
  std::sort(x.begin(), x.end());
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvariantViolation(what);
}

}  // namespace detail

/// Monte-Carlo estimate of C_n = 1 / E[MAD_0] under N(0, 1) for each
/// (n, estimator); the same estimator serves as inner and outer median.
inline FactorReport estimate_factors(const SimulationConfig& config) {
  const std::size_t reps = detail::repetitions_or(config, 1'000'000);
  detail::validate(config, reps);

  struct Combo {
    std::size_t n;
    MedianEstimatorKind kind;
  };
  std::vector<Combo> combos;
  for (auto n : config.sample_sizes) {
    for (const auto& kind : config.estimators) combos.push_back({n, kind});
  }
  const auto plan = detail::plan_chunks(combos.size(), reps, config.chunk_size);

  const auto partials = detail::parallel_map(
      plan.size(), config.threads, [&](std::size_t i) {
        const auto& task = plan[i];
        const auto& combo = combos[task.combo];
        RngStream rng(config.master_seed,
                      stream_id(detail::Study::Factors, combo.n,
                                detail::estimator_code(combo.kind), task.chunk));
        Variates variates(rng);
        MedianEstimator estimator(combo.kind, combo.n);
        std::vector<double> x(combo.n);
        std::vector<double> scratch;
        detail::Moments m;
        for (std::size_t r = 0; r < task.size; ++r) {
          detail::draw_sorted(detail::standard_normal(), variates, x);
          m.add(mad_uncorrected(x, estimator, scratch));
        }
        return m;
      });

  FactorReport report;
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < combos.size(); ++k) {
    const auto& combo = combos[k];
    detail::Moments total;
    while (cursor < plan.size() && plan[cursor].combo == k) {
      total.merge(partials[cursor++]);
    }
    const double m_n = total.compensated_mean();
    const double c_n = 1.0 / m_n;
    const double se_m = std::sqrt(total.variance() / static_cast<double>(reps));
    detail::require(std::fabs(c_n * m_n - 1.0) <= 1e-12,
                    "C_n * M_n deviates from 1");
    report.rows.push_back(
        {combo.n, combo.kind, m_n, c_n, se_m / (m_n * m_n), reps});
  }
  return report;
}

/// Relative efficiency of corrected MAD_HD and MAD_THD-SQRT against MAD_SM
/// under N(0, 1). Every estimator sees the same samples.
inline EfficiencyReport efficiency(const SimulationConfig& config) {
  const std::size_t reps = detail::repetitions_or(config, 10'000);
  detail::validate(config, reps);
  const auto has = [&](const MedianEstimatorKind& k) {
    return std::find(config.estimators.begin(), config.estimators.end(), k) !=
           config.estimators.end();
  };
  if (!has(MedianEstimatorKind::sm())) {
    throw ConfigError("efficiency needs the sample median as its baseline");
  }
  const bool with_hd = has(MedianEstimatorKind::hd());
  const bool with_thd = has(MedianEstimatorKind::thd_sqrt());
  const std::array kinds = {MedianEstimatorKind::sm(), MedianEstimatorKind::hd(),
                            MedianEstimatorKind::thd_sqrt()};

  const auto plan = detail::plan_chunks(config.sample_sizes.size(), reps,
                                        config.chunk_size);
  const auto partials = detail::parallel_map(
      plan.size(), config.threads, [&](std::size_t i) {
        const auto& task = plan[i];
        const std::size_t n = config.sample_sizes[task.combo];
        RngStream rng(config.master_seed,
                      stream_id(detail::Study::Efficiency, n, task.chunk));
        Variates variates(rng);
        std::vector<MadEstimator> mads;
        for (const auto& kind : kinds) mads.emplace_back(kind, n);
        std::vector<double> x(n);
        std::array<detail::Moments, 3> m;
        for (std::size_t r = 0; r < task.size; ++r) {
          detail::draw_sorted(detail::standard_normal(), variates, x);
          for (std::size_t e = 0; e < 3; ++e) m[e].add(mads[e].corrected(x));
        }
        return m;
      });

  EfficiencyReport report;
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < config.sample_sizes.size(); ++k) {
    std::array<detail::Moments, 3> total;
    while (cursor < plan.size() && plan[cursor].combo == k) {
      for (std::size_t e = 0; e < 3; ++e) total[e].merge(partials[cursor][e]);
      ++cursor;
    }
    EfficiencyRow row{config.sample_sizes[k], total[0].variance(), {}, {}, {}, {}};
    if (with_hd) {
      row.var_hd = total[1].variance();
      row.e_hd = row.var_sm / *row.var_hd;
      detail::require(std::fabs(*row.e_hd * *row.var_hd - row.var_sm) <=
                          1e-12 * row.var_sm,
                      "e_hd inconsistent with its variances");
    }
    if (with_thd) {
      row.var_thd = total[2].variance();
      row.e_thd = row.var_sm / *row.var_thd;
      detail::require(std::fabs(*row.e_thd * *row.var_thd - row.var_sm) <=
                          1e-12 * row.var_sm,
                      "e_thd inconsistent with its variances");
    }
    report.rows.push_back(row);
  }
  return report;
}

/// Dispersion of corrected MAD estimates across light- and heavy-tailed
/// distributions, summarized by SD, the Type 7 IQR and corrected MAD_SM.
inline SensitivityReport sensitivity(const SimulationConfig& config) {
  const std::size_t reps = detail::repetitions_or(config, 1'000);
  detail::validate(config, reps);
  if (config.distributions.empty()) throw ConfigError("no distributions given");

  struct Combo {
    const DistributionSpec* spec;
    std::uint64_t code;
    std::size_t n;
  };
  std::vector<Combo> combos;
  for (const auto& d : config.distributions) {
    const auto code = detail::text_code(d.to_string());
    for (auto n : config.sample_sizes) combos.push_back({&d, code, n});
  }
  const std::size_t e_count = config.estimators.size();
  const auto plan = detail::plan_chunks(combos.size(), reps, config.chunk_size);

  const auto partials = detail::parallel_map(
      plan.size(), config.threads, [&](std::size_t i) {
        const auto& task = plan[i];
        const auto& combo = combos[task.combo];
        RngStream rng(config.master_seed,
                      stream_id(detail::Study::Sensitivity, combo.code, combo.n,
                                task.chunk));
        Variates variates(rng);
        std::vector<MadEstimator> mads;
        for (const auto& kind : config.estimators) mads.emplace_back(kind, combo.n);
        std::vector<double> x(combo.n);
        std::vector<std::vector<double>> estimates(
            e_count, std::vector<double>(task.size));
        for (std::size_t r = 0; r < task.size; ++r) {
          detail::draw_sorted(*combo.spec, variates, x);
          for (std::size_t e = 0; e < e_count; ++e) {
            estimates[e][r] = mads[e].corrected(x);
          }
        }
        return estimates;
      });

  SensitivityReport report;
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < combos.size(); ++k) {
    std::vector<std::vector<double>> all(e_count);
    while (cursor < plan.size() && plan[cursor].combo == k) {
      for (std::size_t e = 0; e < e_count; ++e) {
        all[e].insert(all[e].end(), partials[cursor][e].begin(),
                      partials[cursor][e].end());
      }
      ++cursor;
    }
    for (std::size_t e = 0; e < e_count; ++e) {
      detail::Moments m;
      for (double v : all[e]) m.add(v);
      const Sample estimates(std::move(all[e]));
      const double sd = std::sqrt(m.variance());
      const double iqr = hf7_quantile(estimates, 0.75) - hf7_quantile(estimates, 0.25);
      const double mad = mad_corrected(estimates, MedianEstimatorKind::sm()).corrected;
      for (auto [agg, value] : {std::pair{Aggregator::SD, sd},
                                std::pair{Aggregator::IQR, iqr},
                                std::pair{Aggregator::MadSM, mad}}) {
        detail::require(value >= 0.0, "negative dispersion");
        report.rows.push_back({*combos[k].spec, combos[k].n,
                               config.estimators[e], agg, value});
      }
    }
  }
  return report;
}

/// A (n, C_n) point for the prediction-equation fit.
struct FactorPoint {
  std::size_t n;
  double c_n;
};

/// Least-squares fit of A_n = 1/(C_n Phi^{-1}(0.75)) - 1 on (1/n, 1/n^2)
/// without intercept, over points with n_low < n <= n_high.
inline FitResult fit_prediction(std::span<const FactorPoint> points,
                                std::size_t n_low, std::size_t n_high,
                                std::string estimator) {
  std::vector<FactorPoint> used;
  for (const auto& p : points) {
    if (p.n > n_low && p.n <= n_high) used.push_back(p);
  }
  std::sort(used.begin(), used.end(),
            [](auto l, auto r) { return l.n < r.n; });
  used.erase(std::unique(used.begin(), used.end(),
                         [](auto l, auto r) { return l.n == r.n; }),
             used.end());
  if (used.size() < 3) {
    throw InsufficientDataError("the fit needs at least 3 distinct n in (" +
                                std::to_string(n_low) + ", " +
                                std::to_string(n_high) + "]");
  }

  const double q = asymptotic_mad();
  Eigen::MatrixXd design(used.size(), 2);
  Eigen::VectorXd response(used.size());
  for (std::size_t i = 0; i < used.size(); ++i) {
    const double inv = 1.0 / static_cast<double>(used[i].n);
    design(i, 0) = inv;
    design(i, 1) = inv * inv;
    response(i) = 1.0 / (used[i].c_n * q) - 1.0;
  }
  // Columns differ in scale by a factor of ~n; equilibrate before QR.
  const Eigen::Vector2d scale = design.colwise().norm().transpose();
  const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();
  const Eigen::Vector2d coef =
      scaled.colPivHouseholderQr().solve(response).cwiseQuotient(scale);

  FitResult fit{std::move(estimator), coef(0), coef(1), 0.0, n_low, n_high};
  for (const auto& p : used) {
    const double predicted = predicted_factor(p.n, {fit.alpha, fit.beta});
    fit.residual_max = std::max(fit.residual_max, std::fabs(predicted - p.c_n));
  }
  return fit;
}

/// Fit on the published table of a built-in estimator.
inline FitResult fit_prediction(const MedianEstimatorKind& kind,
                                std::size_t n_low, std::size_t n_high) {
  std::vector<FactorPoint> points;
  for (const auto& e : published_table(kind)) {
    points.push_back({static_cast<std::size_t>(e.n), e.c});
  }
  return fit_prediction(points, n_low, n_high, kind.name());
}

/// Fit on simulated factors of one estimator.
inline FitResult fit_prediction(const FactorReport& report,
                                const MedianEstimatorKind& kind,
                                std::size_t n_low, std::size_t n_high) {
  std::vector<FactorPoint> points;
  for (const auto& row : report.rows) {
    if (row.estimator == kind) points.push_back({row.n, row.c_n});
  }
  return fit_prediction(points, n_low, n_high, kind.name());
}

}  // namespace madkit
