#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "madkit/mad.hpp"

using Catch::Approx;
using namespace madkit;

namespace {

const MedianEstimatorKind kKinds[] = {MedianEstimatorKind::sm(),
                                      MedianEstimatorKind::hd(),
                                      MedianEstimatorKind::thd_sqrt()};

double qnorm75() { return 0.674489750196082; }

}  // namespace

TEST_CASE("asymptotic constants", "[mad]") {
  CHECK(std::fabs(asymptotic_factor() - 1.4826022185056) < 1e-12);
  CHECK(std::fabs(asymptotic_mad() - qnorm75()) < 1e-15);
  CHECK(asymptotic_factor() * qnorm75() == Approx(1.0).margin(1e-14));
  // Correctly rounded sqrt(pi); std::sqrt of the rounded pi is one ulp low.
  CHECK(kExactFactorTwo == 1.7724538509055160273);
  CHECK(kExactFactorTwo == Approx(std::sqrt(std::numbers::pi)).margin(3e-16));
}

TEST_CASE("mad_uncorrected", "[mad]") {
  CHECK(mad_uncorrected(Sample{1, 2, 4}, MedianEstimatorKind::sm()) == 1.0);
  for (const auto& kind : kKinds) {
    CHECK(mad_uncorrected(Sample{3, 3, 3, 3, 3}, kind) == 0.0);
    CHECK(mad_uncorrected(Sample{-1.5, 4.0}, kind) == 2.75);
    CHECK_THROWS_AS(mad_uncorrected(Sample{1.0}, kind), SampleTooSmallError);
    CHECK_THROWS_AS(mad_uncorrected(Sample{}, kind), SampleTooSmallError);
  }
}

TEST_CASE("mad_uncorrected agrees with a naive two-pass evaluation", "[mad]") {
  std::mt19937_64 gen(31);
  std::lognormal_distribution<double> dist(0.0, 1.5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(2 + trial % 37);
    for (double& x : v) x = dist(gen);
    const Sample x(v);
    for (const auto& kind : kKinds) {
      const double center = median(x, kind);
      std::vector<double> dev;
      for (double xi : x) dev.push_back(std::fabs(xi - center));
      CHECK(mad_uncorrected(x, kind) == median(Sample(dev), kind));
    }
  }
}

TEST_CASE("correction_factor defaults", "[mad]") {
  for (const auto& kind : kKinds) {
    CHECK(std::fabs(correction_factor(2, kind) - 1.77245385090552) < 1e-14);
    CHECK_THROWS_AS(correction_factor(1, kind), SampleTooSmallError);
  }
  CHECK(correction_factor(3, MedianEstimatorKind::sm()) == 2.2049);
  CHECK(correction_factor(10, MedianEstimatorKind::hd()) == 1.5529);
  CHECK(correction_factor(20, MedianEstimatorKind::thd_sqrt()) == 1.5449);

  const double expected200 =
      1.0 / (qnorm75() * (1.0 - 0.7668 / 200 - 2.1897 / (200.0 * 200.0)));
  CHECK(correction_factor(200, MedianEstimatorKind::sm()) ==
        Approx(expected200).margin(1e-12));
  CHECK(correction_factor(200, MedianEstimatorKind::sm()) ==
        Approx(1.4884).margin(1e-4));

  const double gap = correction_factor(3000, MedianEstimatorKind::sm()) -
                     asymptotic_factor();
  CHECK(gap > 0.0);
  CHECK(gap == Approx(0.0004).margin(1e-4));
}

TEST_CASE("table iff n <= 100 under the default model", "[mad]") {
  // 109 is tabulated, but the default model uses the fitted equation there.
  const auto sm = MedianEstimatorKind::sm();
  CHECK(correction_factor(109, sm) == predicted_factor(109, kFitSampleMedian));
  CHECK(correction_factor(109, sm, FactorModel::table()) == 1.4933);
  CHECK(std::fabs(correction_factor(109, sm) - 1.4933) < 1e-3);
  CHECK_THROWS_AS(correction_factor(101, sm, FactorModel::table()),
                  OutOfDomainError);
}

TEST_CASE("default model is continuous across the table seam", "[mad]") {
  for (const auto& kind : kKinds) {
    CHECK(std::fabs(correction_factor(100, kind) - correction_factor(101, kind)) <
          0.002);
  }
}

TEST_CASE("legacy schemes", "[mad]") {
  const auto sm = MedianEstimatorKind::sm();
  const double hayes9 = 1.0 / (qnorm75() * (1.0 - 0.7635 / 9 - 0.565 / 81));
  CHECK(correction_factor(9, sm, FactorModel::hayes()) ==
        Approx(hayes9).margin(1e-14));
  const double hayes10 = 1.0 / (qnorm75() * (1.0 - 0.7612 / 10 - 1.123 / 100));
  CHECK(correction_factor(10, sm, FactorModel::hayes()) ==
        Approx(hayes10).margin(1e-14));
  CHECK_THROWS_AS(correction_factor(8, sm, FactorModel::hayes()),
                  OutOfDomainError);

  CHECK(correction_factor(3, sm, FactorModel::croux_rousseeuw()) ==
        Approx(1.495 / qnorm75()).margin(1e-12));
  CHECK(correction_factor(12, sm, FactorModel::croux_rousseeuw()) ==
        Approx(12.0 / 11.2 / qnorm75()).margin(1e-12));
  CHECK(correction_factor(4, sm, FactorModel::williams()) ==
        Approx(1.360 / qnorm75()).margin(1e-12));
  CHECK(correction_factor(20, sm, FactorModel::williams()) ==
        Approx(20.0 / (20.0 - 0.801) / qnorm75()).margin(1e-12));

  CHECK(correction_factor(2, sm, FactorModel::park()) == 1.7722);
  CHECK(correction_factor(100, sm, FactorModel::park()) ==
        *detail::lookup(tables::kPark, 100));
  const double n = 250;
  CHECK(correction_factor(250, sm, FactorModel::park()) ==
        Approx(1.0 / (qnorm75() * (1 - 0.76213 / n - 0.86413 / (n * n))))
            .margin(1e-14));
  CHECK(correction_factor(250, sm, FactorModel::park(ParkLargeN::WilliamsForm)) ==
        Approx(1.0 / (qnorm75() * (1 - 0.804168866 * std::pow(n, -1.008922))))
            .margin(1e-14));

  CHECK(correction_factor(77, sm, FactorModel::asymptotic()) ==
        asymptotic_factor());
  CHECK(correction_factor(2, sm, FactorModel::exact2()) == kExactFactorTwo);
  CHECK_THROWS_AS(correction_factor(3, sm, FactorModel::exact2()),
                  OutOfDomainError);
}

TEST_CASE("fitted and user table models", "[mad]") {
  const auto hd = MedianEstimatorKind::hd();
  CHECK(correction_factor(400, hd, FactorModel::fitted()) ==
        predicted_factor(400, kFitHarrellDavis));
  CHECK(correction_factor(400, hd, FactorModel::fitted(-0.5, -3.0)) ==
        Approx(1.0 / (qnorm75() * (1 - 0.5 / 400 - 3.0 / 160000))).margin(1e-15));
  const auto user = FactorModel::table({{7, 1.9}, {5, 2.1}});
  CHECK(correction_factor(5, hd, user) == 2.1);
  CHECK(correction_factor(7, hd, user) == 1.9);
  CHECK_THROWS_AS(correction_factor(6, hd, user), OutOfDomainError);
}

TEST_CASE("custom THD widths need an explicit model", "[mad]") {
  const auto thd = MedianEstimatorKind::thd(0.3);
  CHECK_THROWS_AS(correction_factor(10, thd), OutOfDomainError);
  CHECK_THROWS_AS(correction_factor(10, thd, FactorModel::table()),
                  OutOfDomainError);
  CHECK_THROWS_AS(correction_factor(200, thd, FactorModel::fitted()),
                  OutOfDomainError);
  CHECK(correction_factor(200, thd, FactorModel::fitted(-0.6, -4.0)) > 1.48);
  CHECK(correction_factor(10, thd, FactorModel::table({{10, 1.6}})) == 1.6);
}

TEST_CASE("mad_corrected", "[mad]") {
  const auto v = mad_corrected(Sample{0, 1}, MedianEstimatorKind::sm());
  CHECK(v.uncorrected == 0.5);
  CHECK(v.factor_used == kExactFactorTwo);
  CHECK(v.corrected == Approx(0.88622692545276).margin(1e-14));
  CHECK(v.n == 2);

  const auto v3 = mad_corrected(Sample{1, 2, 4}, MedianEstimatorKind::sm());
  CHECK(v3.corrected == 2.2049);

  for (const auto& kind : kKinds) {
    CHECK(mad_corrected(Sample{4, 4, 4}, kind).corrected == 0.0);
  }
}

TEST_CASE("MAD is scale and translation equivariant", "[mad][property]") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal(1.0, 4.0);
  std::uniform_real_distribution<double> scale(-20.0, 20.0);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(2 + trial % 30);
    for (double& x : v) x = normal(gen);
    double a = scale(gen);
    if (a == 0.0) a = 1.0;
    const double b = shift(gen);
    std::vector<double> w(v);
    for (double& x : w) x = a * x + b;
    for (const auto& kind : kKinds) {
      const double base = mad_corrected(Sample(v), kind).corrected;
      const double mapped = mad_corrected(Sample(w), kind).corrected;
      CHECK(mapped == Approx(std::fabs(a) * base).margin(1e-9 * (1 + std::fabs(b))));
    }
  }
}

TEST_CASE("MadEstimator matches the free functions", "[mad]") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  for (const auto& kind : kKinds) {
    MadEstimator est(kind, 9);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(9);
      for (double& x : v) x = normal(gen);
      const Sample x(v);
      const auto ref = mad_corrected(x, kind);
      CHECK(est.uncorrected(x.sorted()) == ref.uncorrected);
      CHECK(est.corrected(x.sorted()) == ref.corrected);
    }
  }
}

TEST_CASE("published tables: shape and spot values", "[mad][tables]") {
  CHECK(std::size(tables::kSampleMedian) == 139);
  CHECK(std::size(tables::kHarrellDavis) == 139);
  CHECK(std::size(tables::kTrimmedHarrellDavisSqrt) == 139);
  CHECK(std::size(tables::kPark) == 131);
  auto sm = [](std::size_t n) { return *detail::lookup(tables::kSampleMedian, n); };
  CHECK(sm(3) == 2.2049);
  CHECK(sm(3000) == 1.4830);
  CHECK(*detail::lookup(tables::kHarrellDavis, 10) == 1.5529);
  CHECK(*detail::lookup(tables::kTrimmedHarrellDavisSqrt, 20) == 1.5449);
  CHECK(*detail::lookup(tables::kTrimmedHarrellDavisSqrt, 4) == sm(4));
  CHECK(sm(4) == 2.0172);
}

TEST_CASE("tabulated factors exceed C_inf and are non-increasing from n = 10",
          "[mad][tables]") {
  for (auto rows : {std::span<const tables::FactorEntry>(tables::kSampleMedian),
                    std::span<const tables::FactorEntry>(tables::kHarrellDavis),
                    std::span<const tables::FactorEntry>(
                        tables::kTrimmedHarrellDavisSqrt),
                    std::span<const tables::FactorEntry>(tables::kPark)}) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].c > asymptotic_factor());
      if (i > 0) CHECK(rows[i].n > rows[i - 1].n);
    }
  }
  for (auto rows : {std::span<const tables::FactorEntry>(tables::kSampleMedian),
                    std::span<const tables::FactorEntry>(tables::kHarrellDavis),
                    std::span<const tables::FactorEntry>(
                        tables::kTrimmedHarrellDavisSqrt)}) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i - 1].n >= 10) CHECK(rows[i].c <= rows[i - 1].c);
    }
  }
}

TEST_CASE("Park and sample-median tables agree to 0.00065", "[mad][tables]") {
  double worst = 0.0;
  for (std::size_t n = 2; n <= 100; ++n) {
    worst = std::max(worst, std::fabs(*detail::lookup(tables::kPark, n) -
                                      *detail::lookup(tables::kSampleMedian, n)));
  }
  CHECK(worst <= 0.00065 + 1e-12);
}

TEST_CASE("CSV data file matches the embedded tables bit for bit",
          "[mad][tables]") {
  std::ifstream in(MADKIT_DATA_DIR "/factor_tables.csv");
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,c_sm,c_hd,c_thd_sqrt,c_park");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    REQUIRE(cells.size() == 5);
    const auto n = static_cast<std::size_t>(std::stoul(cells[0]));
    CHECK(std::stod(cells[1]) == *detail::lookup(tables::kSampleMedian, n));
    CHECK(std::stod(cells[2]) == *detail::lookup(tables::kHarrellDavis, n));
    CHECK(std::stod(cells[3]) ==
          *detail::lookup(tables::kTrimmedHarrellDavisSqrt, n));
    const auto park = detail::lookup(tables::kPark, n);
    if (cells[4].empty()) {
      CHECK_FALSE(park);
    } else {
      REQUIRE(park);
      CHECK(std::stod(cells[4]) == *park);
    }
    ++rows;
  }
  CHECK(rows == 139);
}
