// Corrected MAD of a small sample under each median estimator, plus a short
// simulation of C_5.

#include <iostream>

#include "madkit/madkit.hpp"

int main() {
  using namespace madkit;

  const Sample x{1.2, 0.8, 3.9, 1.1, 0.95, 1.4, 1.05};
  for (const auto& kind : {MedianEstimatorKind::sm(), MedianEstimatorKind::hd(),
                           MedianEstimatorKind::thd_sqrt()}) {
    const MadValue mad = mad_corrected(x, kind);
    std::cout << kind.name() << ": MAD_0 = " << mad.uncorrected
              << ", C_n = " << mad.factor_used << ", MAD_n = " << mad.corrected
              << '\n';
  }

  SimulationConfig config;
  config.sample_sizes = {5};
  config.repetitions = 100'000;
  config.master_seed = 7;
  const FactorReport report = estimate_factors(config);
  write_csv(std::cout, report);
}
