#pragma once

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>

#include "madkit/simulate.hpp"

namespace madkit {

inline constexpr const char* kVersion = "1.0.0";

namespace csv {

/// Ten significant digits.
inline std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string number(const std::optional<double>& v) {
  return v ? number(*v) : std::string{};
}

/// Quotes a field containing a comma, quote or newline.
inline std::string field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace csv

inline void write_csv(std::ostream& os, const FactorReport& r) {
  os << "n,estimator,m_n,c_n,std_error,repetitions\n";
  for (const auto& row : r.rows) {
    os << row.n << ',' << csv::field(row.estimator.name()) << ','
       << csv::number(row.m_n) << ',' << csv::number(row.c_n) << ','
       << csv::number(row.std_error) << ',' << row.repetitions << '\n';
  }
}

inline void write_csv(std::ostream& os, const EfficiencyReport& r) {
  os << "n,var_sm,var_hd,var_thd,e_hd,e_thd\n";
  for (const auto& row : r.rows) {
    os << row.n << ',' << csv::number(row.var_sm) << ','
       << csv::number(row.var_hd) << ',' << csv::number(row.var_thd) << ','
       << csv::number(row.e_hd) << ',' << csv::number(row.e_thd) << '\n';
  }
}

inline void write_csv(std::ostream& os, const SensitivityReport& r) {
  os << "distribution,n,estimator,aggregator,dispersion\n";
  for (const auto& row : r.rows) {
    os << csv::field(row.distribution.to_string()) << ',' << row.n << ','
       << csv::field(row.estimator.name()) << ',' << to_string(row.aggregator)
       << ',' << csv::number(row.dispersion) << '\n';
  }
}

inline void write_csv(std::ostream& os, const FitResult& fit) {
  os << "estimator,alpha,beta,residual_max,n_low,n_high\n";
  os << csv::field(fit.estimator) << ',' << csv::number(fit.alpha) << ','
     << csv::number(fit.beta) << ',' << csv::number(fit.residual_max) << ','
     << fit.n_low << ',' << fit.n_high << '\n';
}

}  // namespace madkit
