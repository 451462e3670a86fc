// madkit: bias-corrected MAD on user data, and the Monte-Carlo studies behind
// the correction factors.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "madkit/madkit.hpp"

namespace {

using namespace madkit;

constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

std::string read_all(const std::string& path) {
  std::ostringstream buffer;
  if (path == "-") {
    buffer << std::cin.rdbuf();
  } else {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    buffer << in.rdbuf();
  }
  return buffer.str();
}

// Numbers separated by whitespace, commas or newlines; '#' starts a comment.
std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> values;
  std::istringstream lines(text);
  std::string line;
  for (std::size_t line_no = 1; std::getline(lines, line); ++line_no) {
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    for (char& c : line) {
      if (c == ',' || c == ';') c = ' ';
    }
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": not a number: '" + token + "'");
      }
      if (!std::isfinite(v)) {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": non-finite value '" + token + "'");
      }
      values.push_back(v);
    }
  }
  return values;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

std::size_t parse_size(const std::string& text) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') {
    throw ConfigError("not a non-negative integer: '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

// "2,3,5" or "2..10" or a mix of both.
std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  for (const auto& item : split(text, ',')) {
    if (auto dots = item.find(".."); dots != std::string::npos) {
      const auto low = parse_size(item.substr(0, dots));
      const auto high = parse_size(item.substr(dots + 2));
      if (low > high) throw ConfigError("empty range '" + item + "'");
      for (auto n = low; n <= high; ++n) sizes.push_back(n);
    } else {
      sizes.push_back(parse_size(item));
    }
  }
  if (sizes.empty()) throw ConfigError("no sample sizes given");
  return sizes;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    throw ConfigError("range must look like low..high, got '" + text + "'");
  }
  const auto low = parse_size(text.substr(0, dots));
  const auto high = parse_size(text.substr(dots + 2));
  if (low >= high) throw ConfigError("empty range '" + text + "'");
  return {low, high};
}

std::vector<MedianEstimatorKind> parse_estimators(const std::string& text) {
  std::vector<MedianEstimatorKind> kinds;
  for (const auto& item : split(text, ',')) {
    kinds.push_back(MedianEstimatorKind::parse(item));
  }
  if (kinds.empty()) throw ConfigError("no estimators given");
  return kinds;
}

FactorModel parse_model(const std::string& text) {
  if (text == "default") return FactorModel::composite();
  if (text == "exact2") return FactorModel::exact2();
  if (text == "table") return FactorModel::table();
  if (text == "fitted") return FactorModel::fitted();
  if (text == "asymptotic") return FactorModel::asymptotic();
  if (text == "croux-rousseeuw") return FactorModel::croux_rousseeuw();
  if (text == "williams") return FactorModel::williams();
  if (text == "hayes") return FactorModel::hayes();
  if (text == "park") return FactorModel::park();
  if (text == "park-williams") return FactorModel::park(ParkLargeN::WilliamsForm);
  throw ConfigError("unknown model '" + text + "'");
}

// Reads a factors CSV (as written by `madkit factors`) back into a report.
FactorReport read_factor_csv(const std::string& text) {
  FactorReport report;
  std::istringstream lines(text);
  std::string line;
  bool header = false;
  for (std::size_t line_no = 1; std::getline(lines, line); ++line_no) {
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "n,estimator,m_n,c_n,std_error,repetitions") {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": not a factors CSV header");
      }
      header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 6) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 6 fields");
    }
    try {
      report.rows.push_back({parse_size(cells[0]),
                             MedianEstimatorKind::parse(cells[1]),
                             std::stod(cells[2]), std::stod(cells[3]),
                             std::stod(cells[4]), parse_size(cells[5])});
    } catch (const std::invalid_argument&) {
      throw ConfigError("line " + std::to_string(line_no) + ": bad field");
    }
  }
  return report;
}

struct Output {
  std::string path;

  template <typename Writer>
  void emit(Writer&& write) const {
    if (path.empty() || path == "-") {
      write(std::cout);
      std::cout.flush();
      return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    write(out);
  }
};

std::string provenance(const std::string& seed, const std::string& reps) {
  return "# seed=" + seed + " reps=" + reps + " version=" + kVersion + "\n";
}

struct SimFlags {
  std::string sizes;
  std::string estimators = "sm,hd,thd-sqrt";
  std::optional<std::size_t> reps;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::size_t chunk_size = 10000;
  std::string out;

  void attach(CLI::App* cmd, const std::string& default_sizes) {
    sizes = default_sizes;
    cmd->add_option("--n", sizes, "Sample sizes, e.g. 2,3,5 or 2..10")
        ->capture_default_str();
    cmd->add_option("--reps", reps, "Repetitions per sample size");
    cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
    cmd->add_option("--estimators", estimators,
                    "Comma-separated: sm, hd, thd-sqrt, thd:<width>")
        ->capture_default_str();
    cmd->add_option("--threads", threads, "Worker cap (0 = all cores)")
        ->envname("MADKIT_THREADS");
    cmd->add_option("--chunk-size", chunk_size,
                    "Repetitions per seeded chunk")
        ->capture_default_str();
    cmd->add_option("--out", out, "Output file (default stdout)");
  }

  SimulationConfig config() const {
    SimulationConfig c;
    c.sample_sizes = parse_sizes(sizes);
    c.repetitions = reps;
    c.master_seed = seed;
    c.estimators = parse_estimators(estimators);
    c.threads = threads;
    c.chunk_size = chunk_size;
    return c;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Bias-corrected median absolute deviation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // mad
  auto* mad_cmd = app.add_subcommand("mad", "MAD of numbers read from a file or stdin");
  std::string mad_input = "-";
  std::string mad_estimator = "thd-sqrt";
  std::string mad_model = "default";
  bool mad_csv = false;
  mad_cmd->add_option("input", mad_input, "Input path, or - for stdin")
      ->capture_default_str();
  mad_cmd->add_option("--estimator", mad_estimator,
                      "sm, hd, thd-sqrt or thd:<width>")
      ->capture_default_str();
  mad_cmd->add_option("--model", mad_model,
                      "default, exact2, table, fitted, asymptotic, "
                      "croux-rousseeuw, williams, hayes, park, park-williams")
      ->capture_default_str();
  mad_cmd->add_flag("--csv", mad_csv, "Print CSV instead of a table");

  // simulations
  SimFlags factor_flags, efficiency_flags, sensitivity_flags;
  auto* factors_cmd = app.add_subcommand(
      "factors", "Estimate C_n by simulation under the standard normal");
  factor_flags.attach(factors_cmd, "2..10");
  auto* efficiency_cmd = app.add_subcommand(
      "efficiency", "Relative efficiency of MAD_HD and MAD_THD-SQRT vs MAD_SM");
  efficiency_flags.attach(efficiency_cmd, "2..10");
  auto* sensitivity_cmd = app.add_subcommand(
      "sensitivity", "Dispersion of MAD estimates across distributions");
  sensitivity_flags.attach(sensitivity_cmd, "5");
  std::string dists;
  sensitivity_cmd->add_option("--dist", dists,
                              "Distribution specs, e.g. cauchy(x0=0,gamma=1); "
                              "default: the standard set of 20");

  // fit
  auto* fit_cmd = app.add_subcommand(
      "fit", "Fit the large-n prediction equation to tabulated factors");
  std::string fit_estimator = "sm";
  std::string fit_range = "100..500";
  std::string fit_from;
  std::string fit_out;
  fit_cmd->add_option("--estimator", fit_estimator, "sm, hd or thd-sqrt")
      ->capture_default_str();
  fit_cmd->add_option("--range", fit_range, "Fit over low < n <= high")
      ->capture_default_str();
  fit_cmd->add_option("--from", fit_from,
                      "Factors CSV to fit instead of the embedded table");
  fit_cmd->add_option("--out", fit_out, "Output file (default stdout)");

  // tables
  auto* tables_cmd = app.add_subcommand("tables", "Print the embedded factor tables");
  std::string tables_estimator;
  tables_cmd->add_option("--estimator", tables_estimator,
                         "sm, hd, thd-sqrt or park; default prints all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (mad_cmd->parsed()) {
    const auto kind = MedianEstimatorKind::parse(mad_estimator);
    const auto model = parse_model(mad_model);
    const auto values = parse_numbers(read_all(mad_input));
    if (values.size() < 2) {
      throw SampleTooSmallError(values.size(), 2);
    }
    const auto result = mad_corrected(Sample(values), kind, model);
    if (mad_csv) {
      std::cout << "n,estimator,mad0,factor,mad\n"
                << result.n << ',' << csv::field(kind.name()) << ','
                << csv::number(result.uncorrected) << ','
                << csv::number(result.factor_used) << ','
                << csv::number(result.corrected) << '\n';
    } else {
      std::cout << "n          " << result.n << '\n'
                << "estimator  " << kind.name() << '\n'
                << "model      " << model.name() << '\n'
                << "MAD_0      " << csv::number(result.uncorrected) << '\n'
                << "C_n        " << csv::number(result.factor_used) << '\n'
                << "MAD_n      " << csv::number(result.corrected) << '\n';
    }
    return 0;
  }

  auto reps_text = [](const SimulationConfig& c, std::size_t fallback) {
    return std::to_string(c.repetitions.value_or(fallback));
  };

  if (factors_cmd->parsed()) {
    const auto config = factor_flags.config();
    const auto report = estimate_factors(config);
    Output{factor_flags.out}.emit([&](std::ostream& os) {
      os << provenance(std::to_string(config.master_seed),
                       reps_text(config, 1'000'000));
      write_csv(os, report);
    });
    return 0;
  }

  if (efficiency_cmd->parsed()) {
    const auto config = efficiency_flags.config();
    const auto report = efficiency(config);
    Output{efficiency_flags.out}.emit([&](std::ostream& os) {
      os << provenance(std::to_string(config.master_seed),
                       reps_text(config, 10'000));
      write_csv(os, report);
    });
    return 0;
  }

  if (sensitivity_cmd->parsed()) {
    auto config = sensitivity_flags.config();
    config.distributions = dists.empty() ? sensitivity_distributions()
                                         : parse_distribution_list(dists);
    const auto report = sensitivity(config);
    Output{sensitivity_flags.out}.emit([&](std::ostream& os) {
      os << provenance(std::to_string(config.master_seed),
                       reps_text(config, 1'000));
      write_csv(os, report);
    });
    return 0;
  }

  if (fit_cmd->parsed()) {
    const auto kind = MedianEstimatorKind::parse(fit_estimator);
    const auto [low, high] = parse_range(fit_range);
    const auto fit = fit_from.empty()
                         ? fit_prediction(kind, low, high)
                         : fit_prediction(read_factor_csv(read_all(fit_from)),
                                          kind, low, high);
    Output{fit_out}.emit([&](std::ostream& os) {
      os << provenance("none", "none");
      write_csv(os, fit);
    });
    return 0;
  }

  if (tables_cmd->parsed()) {
    auto print = [](double c) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%.4f", c);
      return std::string(buf);
    };
    if (!tables_estimator.empty()) {
      const auto rows = tables_estimator == "park"
                            ? std::span<const tables::FactorEntry>(tables::kPark)
                            : published_table(
                                  MedianEstimatorKind::parse(tables_estimator));
      std::cout << "n,c_n\n";
      for (const auto& e : rows) std::cout << e.n << ',' << print(e.c) << '\n';
      return 0;
    }
    std::cout << "n,c_sm,c_hd,c_thd_sqrt,c_park\n";
    const std::span<const tables::FactorEntry> park(tables::kPark);
    for (std::size_t i = 0; i < std::size(tables::kSampleMedian); ++i) {
      const int n = tables::kSampleMedian[i].n;
      std::cout << n << ',' << print(tables::kSampleMedian[i].c) << ','
                << print(tables::kHarrellDavis[i].c) << ','
                << print(tables::kTrimmedHarrellDavisSqrt[i].c) << ',';
      if (auto c = detail::lookup(park, static_cast<std::size_t>(n))) {
        std::cout << print(*c);
      }
      std::cout << '\n';
    }
    return 0;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const madkit::InvariantViolation& e) {
    std::cerr << "madkit: internal check failed: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::invalid_argument& e) {
    std::cerr << "madkit: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "madkit: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "madkit: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "madkit: " << e.what() << '\n';
    return kExitInternal;
  }
}
