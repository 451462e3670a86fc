#include <catch2/catch_amalgamated.hpp>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/beta.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <random>

#include "madkit/specfun.hpp"

using Catch::Approx;
using madkit::BetaParams;
using madkit::reg_inc_beta;

TEST_CASE("reg_inc_beta matches boost ibeta", "[specfun]") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> shape(0.05, 60.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double a = shape(gen);
    const double b = shape(gen);
    const double v = unit(gen);
    const double expected = boost::math::ibeta(a, b, v);
    worst = std::max(worst, std::fabs(reg_inc_beta(v, BetaParams(a, b)) - expected));
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("reg_inc_beta is accurate for the large shapes of big samples",
          "[specfun]") {
  for (double n : {100.0, 1000.0, 3000.0, 1e5}) {
    const BetaParams params = BetaParams::for_quantile(static_cast<std::size_t>(n), 0.5);
    for (double v : {0.45, 0.49, 0.499, 0.5001, 0.51, 0.55}) {
      const double expected = boost::math::ibeta(params.alpha(), params.beta(), v);
      CHECK(std::fabs(reg_inc_beta(v, params) - expected) < 1e-13);
    }
  }
}

TEST_CASE("reg_inc_beta boundary and symmetric values", "[specfun]") {
  const BetaParams p(2.5, 7.0);
  CHECK(reg_inc_beta(0.0, p) == 0.0);
  CHECK(reg_inc_beta(1.0, p) == 1.0);
  CHECK(reg_inc_beta(0.5, BetaParams(3.5, 3.5)) == 0.5);
  // I_v(1, 1) = v
  CHECK(reg_inc_beta(0.3, BetaParams(1, 1)) == Approx(0.3).margin(1e-15));
  // I_v(a, 1) = v^a
  CHECK(reg_inc_beta(0.6, BetaParams(3, 1)) == Approx(0.216).margin(1e-15));
  CHECK_THROWS_AS(reg_inc_beta(1.5, p), madkit::DomainError);
  CHECK_THROWS_AS(reg_inc_beta(-0.1, p), madkit::DomainError);
  CHECK_THROWS_AS(BetaParams(0.0, 1.0), madkit::DomainError);
  CHECK_THROWS_AS(BetaParams(1.0, -2.0), madkit::DomainError);
}

TEST_CASE("reg_inc_beta is monotone in v", "[specfun]") {
  const BetaParams p(5.5, 5.5);
  double previous = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double current = reg_inc_beta(i / 1000.0, p);
    CHECK(current >= previous);
    previous = current;
  }
}

TEST_CASE("reflection identity I_v(a,b) = 1 - I_{1-v}(b,a)", "[specfun]") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> shape(0.1, 40.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = shape(gen), b = shape(gen), v = unit(gen);
    const double lhs = reg_inc_beta(v, BetaParams(a, b));
    const double rhs = 1.0 - reg_inc_beta(1.0 - v, BetaParams(b, a));
    REQUIRE(std::fabs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("beta_pdf", "[specfun]") {
  CHECK(madkit::beta_pdf(0.5, BetaParams(2, 2)) == Approx(1.5).epsilon(1e-14));
  CHECK(madkit::beta_pdf(0.25, BetaParams(2, 3)) ==
        Approx(12 * 0.25 * 0.75 * 0.75).epsilon(1e-14));
  CHECK(std::isinf(madkit::beta_pdf(0.0, BetaParams(0.5, 2))));
  CHECK(madkit::beta_pdf(1.0, BetaParams(0.5, 2)) == 0.0);
  CHECK(madkit::beta_pdf(0.0, BetaParams(1, 4)) == 4.0);
  CHECK(madkit::beta_pdf(0.3, BetaParams(40, 60)) ==
        Approx(boost::math::pdf(boost::math::beta_distribution<double>(40, 60), 0.3))
            .epsilon(1e-12));
}

TEST_CASE("normal quantile", "[specfun]") {
  CHECK(std::fabs(madkit::normal_quantile(0.75) - 0.674489750196082) < 1e-12);
  CHECK(madkit::normal_quantile(0.5) == 0.0);
  CHECK(madkit::normal_quantile(0.25) == -madkit::normal_quantile(0.75));
  boost::math::normal_distribution<> normal;
  for (double p : {1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.6, 0.9,
                   0.97575, 0.999, 1 - 1e-12}) {
    const double expected = boost::math::quantile(normal, p);
    CHECK(madkit::normal_quantile(p) ==
          Approx(expected).epsilon(1e-13).margin(1e-15));
  }
  CHECK_THROWS_AS(madkit::normal_quantile(0.0), madkit::DomainError);
  CHECK_THROWS_AS(madkit::normal_quantile(1.0), madkit::DomainError);
  CHECK_THROWS_AS(madkit::normal_quantile(1.2), madkit::DomainError);
}

TEST_CASE("normal cdf and quantile invert each other", "[specfun]") {
  // Upper tail stops at 5: beyond it 1 - p is too coarse in double to pin x.
  for (double x = -8.0; x <= 5.0; x += 0.25) {
    const double p = madkit::normal_cdf(x);
    CHECK(madkit::normal_quantile(p) == Approx(x).margin(1e-9));
  }
  CHECK(madkit::normal_cdf(0.674489750196082) == Approx(0.75).margin(1e-15));
}

TEST_CASE("Probability rejects values outside [0, 1]", "[specfun]") {
  CHECK_NOTHROW(madkit::Probability(0.0));
  CHECK_NOTHROW(madkit::Probability(1.0));
  CHECK_THROWS_AS(madkit::Probability(-1e-17), madkit::DomainError);
  CHECK_THROWS_AS(madkit::Probability(std::nan("")), madkit::DomainError);
}
