#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "madkit/errors.hpp"
#include "madkit/quantiles.hpp"
#include "madkit/rng.hpp"
#include "madkit/specfun.hpp"

namespace madkit {

/// Normal and gamma variates drawn from one stream. Box-Muller produces
/// normals in pairs; the spare is kept until the next call.
class Variates {
 public:
  explicit Variates(RngStream& rng) : rng_(rng) {}

  double uniform_open() { return rng_.uniform_open(); }

  double normal() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double radius = std::sqrt(-2.0 * std::log(rng_.uniform_open()));
    const double angle = 2.0 * std::numbers::pi * rng_.uniform();
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double boost = std::pow(rng_.uniform_open(), 1.0 / shape);
      return gamma(shape + 1.0) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      const double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = rng_.uniform_open();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  RngStream& rng_;
  std::optional<double> spare_;
};

namespace dist {

struct Uniform {
  double a = 0.0, b = 1.0;
};
struct Triangular {
  double a = 0.0, b = 1.0, c = 0.5;
};
struct Beta {
  double a = 1.0, b = 1.0;
};
struct Normal {
  double m = 0.0, sd = 1.0;
};
struct Weibull {
  double scale = 1.0, shape = 1.0;
};
struct StudentT {
  double df = 1.0;
};
struct Gumbel {
  double loc = 0.0, scale = 1.0;
};
struct Exponential {
  double rate = 1.0;
};
struct Cauchy {
  double x0 = 0.0, gamma = 1.0;
};
/// F(x) = 1 - (loc/x)^shape for x >= loc.
struct Pareto {
  double loc = 1.0, shape = 1.0;
};
struct LogNormal {
  double mlog = 0.0, sdlog = 1.0;
};
/// Unit scale, zero location: F(x) = exp(-x^-shape) for x > 0.
struct Frechet {
  double shape = 1.0;
};
/// Point mass; a degenerate test distribution.
struct Constant {
  double value = 0.0;
};

}  // namespace dist

/// A named parametric distribution with a deterministic sampling recipe.
class DistributionSpec {
 public:
  using Family =
      std::variant<dist::Uniform, dist::Triangular, dist::Beta, dist::Normal,
                   dist::Weibull, dist::StudentT, dist::Gumbel,
                   dist::Exponential, dist::Cauchy, dist::Pareto,
                   dist::LogNormal, dist::Frechet, dist::Constant>;

  template <typename F>
  DistributionSpec(F family) : family_(family) {  // NOLINT: implicit by design
    validate();
  }

  const Family& family() const noexcept { return family_; }

  /// Draws one observation.
  double draw(Variates& v) const {
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, dist::Uniform>) {
            return d.a + (d.b - d.a) * v.uniform_open();
          } else if constexpr (std::is_same_v<T, dist::Triangular>) {
            const double u = v.uniform_open();
            const double span = d.b - d.a;
            if (u < (d.c - d.a) / span) {
              return d.a + std::sqrt(u * span * (d.c - d.a));
            }
            return d.b - std::sqrt((1.0 - u) * span * (d.b - d.c));
          } else if constexpr (std::is_same_v<T, dist::Beta>) {
            const double x = v.gamma(d.a);
            const double y = v.gamma(d.b);
            return x / (x + y);
          } else if constexpr (std::is_same_v<T, dist::Normal>) {
            return d.m + d.sd * v.normal();
          } else if constexpr (std::is_same_v<T, dist::Weibull>) {
            return d.scale * std::pow(-std::log(v.uniform_open()), 1.0 / d.shape);
          } else if constexpr (std::is_same_v<T, dist::StudentT>) {
            const double z = v.normal();
            const double chi2 = 2.0 * v.gamma(d.df / 2.0);
            return z / std::sqrt(chi2 / d.df);
          } else if constexpr (std::is_same_v<T, dist::Gumbel>) {
            return d.loc - d.scale * std::log(-std::log(v.uniform_open()));
          } else if constexpr (std::is_same_v<T, dist::Exponential>) {
            return -std::log(v.uniform_open()) / d.rate;
          } else if constexpr (std::is_same_v<T, dist::Cauchy>) {
            return d.x0 +
                   d.gamma * std::tan(std::numbers::pi * (v.uniform_open() - 0.5));
          } else if constexpr (std::is_same_v<T, dist::Pareto>) {
            return d.loc * std::pow(v.uniform_open(), -1.0 / d.shape);
          } else if constexpr (std::is_same_v<T, dist::LogNormal>) {
            return std::exp(d.mlog + d.sdlog * v.normal());
          } else if constexpr (std::is_same_v<T, dist::Frechet>) {
            return std::pow(-std::log(v.uniform_open()), -1.0 / d.shape);
          } else {
            return d.value;
          }
        },
        family_);
  }

  /// Analytic CDF.
  double cdf(double x) const {
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, dist::Uniform>) {
            return std::clamp((x - d.a) / (d.b - d.a), 0.0, 1.0);
          } else if constexpr (std::is_same_v<T, dist::Triangular>) {
            if (x <= d.a) return 0.0;
            if (x >= d.b) return 1.0;
            if (x <= d.c) return (x - d.a) * (x - d.a) / ((d.b - d.a) * (d.c - d.a));
            return 1.0 - (d.b - x) * (d.b - x) / ((d.b - d.a) * (d.b - d.c));
          } else if constexpr (std::is_same_v<T, dist::Beta>) {
            return reg_inc_beta(std::clamp(x, 0.0, 1.0), BetaParams(d.a, d.b));
          } else if constexpr (std::is_same_v<T, dist::Normal>) {
            return normal_cdf((x - d.m) / d.sd);
          } else if constexpr (std::is_same_v<T, dist::Weibull>) {
            if (x <= 0.0) return 0.0;
            return -std::expm1(-std::pow(x / d.scale, d.shape));
          } else if constexpr (std::is_same_v<T, dist::StudentT>) {
            const double tail =
                0.5 * reg_inc_beta(d.df / (d.df + x * x), BetaParams(d.df / 2.0, 0.5));
            return x >= 0.0 ? 1.0 - tail : tail;
          } else if constexpr (std::is_same_v<T, dist::Gumbel>) {
            return std::exp(-std::exp(-(x - d.loc) / d.scale));
          } else if constexpr (std::is_same_v<T, dist::Exponential>) {
            return x <= 0.0 ? 0.0 : -std::expm1(-d.rate * x);
          } else if constexpr (std::is_same_v<T, dist::Cauchy>) {
            return 0.5 + std::atan((x - d.x0) / d.gamma) / std::numbers::pi;
          } else if constexpr (std::is_same_v<T, dist::Pareto>) {
            return x <= d.loc ? 0.0 : 1.0 - std::pow(d.loc / x, d.shape);
          } else if constexpr (std::is_same_v<T, dist::LogNormal>) {
            return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - d.mlog) / d.sdlog).value();
          } else if constexpr (std::is_same_v<T, dist::Frechet>) {
            return x <= 0.0 ? 0.0 : std::exp(-std::pow(x, -d.shape));
          } else {
            return x >= d.value ? 1.0 : 0.0;
          }
        },
        family_);
  }

  /// Canonical compact form, e.g. "lognormal(mlog=0,sdlog=2)"; parses back
  /// to an equal spec.
  std::string to_string() const {
    auto fmt = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string shortest = buf;
      for (int digits = 1; digits < 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::stod(buf) == v) {
          shortest = buf;
          break;
        }
      }
      return shortest;
    };
    std::string out = family_name() + "(";
    bool first = true;
    for (const auto& [key, value] : parameters()) {
      if (!first) out += ",";
      out += key + "=" + fmt(value);
      first = false;
    }
    return out + ")";
  }

  std::string family_name() const {
    static constexpr const char* kNames[] = {
        "uniform", "triangular", "beta",   "normal",    "weibull",
        "student", "gumbel",     "exp",    "cauchy",    "pareto",
        "lognormal", "frechet",  "constant"};
    return kNames[family_.index()];
  }

  /// Parameters in declaration order.
  std::vector<std::pair<std::string, double>> parameters() const {
    return std::visit(
        [](const auto& d) -> std::vector<std::pair<std::string, double>> {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, dist::Uniform>) return {{"a", d.a}, {"b", d.b}};
          else if constexpr (std::is_same_v<T, dist::Triangular>) return {{"a", d.a}, {"b", d.b}, {"c", d.c}};
          else if constexpr (std::is_same_v<T, dist::Beta>) return {{"a", d.a}, {"b", d.b}};
          else if constexpr (std::is_same_v<T, dist::Normal>) return {{"m", d.m}, {"sd", d.sd}};
          else if constexpr (std::is_same_v<T, dist::Weibull>) return {{"scale", d.scale}, {"shape", d.shape}};
          else if constexpr (std::is_same_v<T, dist::StudentT>) return {{"df", d.df}};
          else if constexpr (std::is_same_v<T, dist::Gumbel>) return {{"loc", d.loc}, {"scale", d.scale}};
          else if constexpr (std::is_same_v<T, dist::Exponential>) return {{"rate", d.rate}};
          else if constexpr (std::is_same_v<T, dist::Cauchy>) return {{"x0", d.x0}, {"gamma", d.gamma}};
          else if constexpr (std::is_same_v<T, dist::Pareto>) return {{"loc", d.loc}, {"shape", d.shape}};
          else if constexpr (std::is_same_v<T, dist::LogNormal>) return {{"mlog", d.mlog}, {"sdlog", d.sdlog}};
          else if constexpr (std::is_same_v<T, dist::Frechet>) return {{"shape", d.shape}};
          else return {{"value", d.value}};
        },
        family_);
  }

  friend bool operator==(const DistributionSpec& l, const DistributionSpec& r) {
    return l.family_.index() == r.family_.index() &&
           l.parameters() == r.parameters();
  }

 private:
  void validate() const {
    for (const auto& [key, value] : parameters()) {
      if (!std::isfinite(value)) {
        throw ConfigError(family_name() + ": parameter " + key +
                          " must be finite");
      }
    }
    auto require = [&](bool ok, const char* what) {
      if (!ok) throw ConfigError(family_name() + ": " + what);
    };
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, dist::Uniform>) {
            require(d.a < d.b, "requires a < b");
          } else if constexpr (std::is_same_v<T, dist::Triangular>) {
            require(d.a < d.b, "requires a < b");
            require(d.a <= d.c && d.c <= d.b, "requires a <= c <= b");
          } else if constexpr (std::is_same_v<T, dist::Beta>) {
            require(d.a > 0 && d.b > 0, "shapes must be positive");
          } else if constexpr (std::is_same_v<T, dist::Normal>) {
            require(d.sd > 0, "sd must be positive");
          } else if constexpr (std::is_same_v<T, dist::Weibull>) {
            require(d.scale > 0 && d.shape > 0, "scale and shape must be positive");
          } else if constexpr (std::is_same_v<T, dist::StudentT>) {
            require(d.df > 0, "df must be positive");
          } else if constexpr (std::is_same_v<T, dist::Gumbel>) {
            require(d.scale > 0, "scale must be positive");
          } else if constexpr (std::is_same_v<T, dist::Exponential>) {
            require(d.rate > 0, "rate must be positive");
          } else if constexpr (std::is_same_v<T, dist::Cauchy>) {
            require(d.gamma > 0, "gamma must be positive");
          } else if constexpr (std::is_same_v<T, dist::Pareto>) {
            require(d.loc > 0 && d.shape > 0, "loc and shape must be positive");
          } else if constexpr (std::is_same_v<T, dist::LogNormal>) {
            require(d.sdlog > 0, "sdlog must be positive");
          } else if constexpr (std::is_same_v<T, dist::Frechet>) {
            require(d.shape > 0, "shape must be positive");
          }
        },
        family_);
  }

  Family family_;
};

/// Fills `out` with i.i.d. draws.
inline void fill(const DistributionSpec& spec, std::span<double> out,
                 RngStream& rng) {
  Variates variates(rng);
  for (double& x : out) x = spec.draw(variates);
}

/// n i.i.d. draws as a sorted Sample.
inline Sample sample(const DistributionSpec& spec, std::size_t n,
                     RngStream& rng) {
  if (n == 0) throw ConfigError("sample size must be positive");
  std::vector<double> values(n);
  fill(spec, values, rng);
  return Sample(std::move(values));
}

namespace detail {

inline std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

}  // namespace detail

/// Parses `family(key=value,...)`. Family names are case-insensitive;
/// omitted parameters keep their defaults (Weibull scale defaults to 1).
inline DistributionSpec parse_distribution(std::string_view text) {
  text = detail::trim(text);
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw ConfigError("expected family(key=value,...), got '" +
                      std::string(text) + "'");
  }
  const std::string family =
      detail::lowercase(detail::trim(text.substr(0, open)));
  std::map<std::string, double> args;
  std::string_view body = text.substr(open + 1, text.size() - open - 2);
  while (!detail::trim(body).empty()) {
    const auto comma = body.find(',');
    const std::string_view item = detail::trim(body.substr(0, comma));
    body = comma == std::string_view::npos ? std::string_view{}
                                           : body.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("expected key=value in '" + std::string(text) + "'");
    }
    const std::string key = detail::lowercase(detail::trim(item.substr(0, eq)));
    const std::string raw(detail::trim(item.substr(eq + 1)));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(raw, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != raw.size()) {
      throw ConfigError("bad number '" + raw + "' for " + key);
    }
    if (!args.emplace(key, value).second) {
      throw ConfigError("duplicate parameter " + key);
    }
  }

  auto take = [&](const char* key, double fallback,
                  bool required = true) -> double {
    auto it = args.find(key);
    if (it == args.end()) {
      if (required) {
        throw ConfigError(family + ": missing parameter " + key);
      }
      return fallback;
    }
    const double v = it->second;
    args.erase(it);
    return v;
  };
  auto finish = [&](DistributionSpec spec) {
    if (!args.empty()) {
      throw ConfigError(family + ": unknown parameter " + args.begin()->first);
    }
    return spec;
  };

  if (family == "uniform") {
    const double a = take("a", 0), b = take("b", 1);
    return finish(dist::Uniform{a, b});
  }
  if (family == "triangular") {
    const double a = take("a", 0), b = take("b", 1), c = take("c", 0.5);
    return finish(dist::Triangular{a, b, c});
  }
  if (family == "beta") {
    const double a = take("a", 1), b = take("b", 1);
    return finish(dist::Beta{a, b});
  }
  if (family == "normal" || family == "gaussian") {
    const double m = take("m", 0), sd = take("sd", 1);
    return finish(dist::Normal{m, sd});
  }
  if (family == "weibull") {
    const double scale = take("scale", 1, false), shape = take("shape", 1);
    return finish(dist::Weibull{scale, shape});
  }
  if (family == "student" || family == "studentt" || family == "t") {
    return finish(dist::StudentT{take("df", 1)});
  }
  if (family == "gumbel") {
    const double loc = take("loc", 0), scale = take("scale", 1);
    return finish(dist::Gumbel{loc, scale});
  }
  if (family == "exp" || family == "exponential") {
    return finish(dist::Exponential{take("rate", 1)});
  }
  if (family == "cauchy") {
    const double x0 = take("x0", 0), gamma = take("gamma", 1);
    return finish(dist::Cauchy{x0, gamma});
  }
  if (family == "pareto") {
    const double loc = take("loc", 1), shape = take("shape", 1);
    return finish(dist::Pareto{loc, shape});
  }
  if (family == "lognormal") {
    const double mlog = take("mlog", 0), sdlog = take("sdlog", 1);
    return finish(dist::LogNormal{mlog, sdlog});
  }
  if (family == "frechet") {
    return finish(dist::Frechet{take("shape", 1)});
  }
  if (family == "constant") {
    return finish(dist::Constant{take("value", 0)});
  }
  throw ConfigError("unknown distribution family '" + family + "'");
}

/// Parses a comma-separated list of specs; commas inside parentheses belong
/// to the spec.
inline std::vector<DistributionSpec> parse_distribution_list(
    std::string_view text) {
  std::vector<DistributionSpec> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const char c = i < text.size() ? text[i] : ',';
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      const auto item = detail::trim(text.substr(start, i - start));
      if (!item.empty()) out.push_back(parse_distribution(item));
      start = i + 1;
    }
  }
  if (depth != 0) throw ConfigError("unbalanced parentheses in distribution list");
  return out;
}

/// The twenty light- and heavy-tailed distributions of the sensitivity study.
inline std::vector<DistributionSpec> sensitivity_distributions() {
  return {
      dist::Uniform{0, 1},        dist::Triangular{0, 2, 1},
      dist::Triangular{0, 2, 0.2}, dist::Beta{2, 4},
      dist::Beta{2, 10},          dist::Normal{0, 1},
      dist::Weibull{1, 2},        dist::StudentT{3},
      dist::Gumbel{0, 1},         dist::Exponential{1},
      dist::Cauchy{0, 1},         dist::Pareto{1, 0.5},
      dist::Pareto{1, 2},         dist::LogNormal{0, 1},
      dist::LogNormal{0, 2},      dist::LogNormal{0, 3},
      dist::Weibull{1, 0.3},      dist::Weibull{1, 0.5},
      dist::Frechet{1},           dist::Frechet{3},
  };
}

}  // namespace madkit
