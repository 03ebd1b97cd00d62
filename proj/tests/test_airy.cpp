#include <doctest.h>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/airy.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bbmwave/airy.hpp"

using namespace bbmwave;

TEST_CASE("ai at the origin matches the cosine-integral definition") {
  // Ai(0) = (1/pi) int_0^inf cos(t^3 / 3) dt; substitute u = t^3 / 3.
  boost::math::quadrature::ooura_fourier_cos<double> cos_integrator;
  auto g = [](double u) { return std::pow(3.0 * u, -2.0 / 3.0); };
  const auto [value, err] = cos_integrator.integrate(g, 1.0);
  const double oracle = value / std::numbers::pi;
  CHECK(airy::ai(0.0) == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(std::fabs(airy::ai(0.0) - 0.3550280539) < 1e-9);
  CHECK(std::fabs(airy::ai_deriv(0.0) + 0.2588194038) < 1e-9);
}

TEST_CASE("ai and ai_deriv agree with an independent implementation") {
  double worst_v = 0.0;
  double worst_d = 0.0;
  for (double x = -20.0; x <= 10.0; x += 0.0137) {
    worst_v = std::max(worst_v, std::fabs(airy::ai(x) - boost::math::airy_ai(x)));
    worst_d = std::max(worst_d, std::fabs(airy::ai_deriv(x) - boost::math::airy_ai_prime(x)));
  }
  CHECK(worst_v < 1e-10);
  CHECK(worst_d < 1e-9);
  for (double x = -40.0; x <= 40.0; x += 0.731) {
    CHECK(std::fabs(airy::ai(x) - boost::math::airy_ai(x)) < 1e-10);
  }
}

TEST_CASE("ai_pair returns both values of a single evaluation") {
  for (double x : {-33.3, -2.0, 0.5, 11.99, 12.01, 35.0}) {
    const auto p = airy::ai_pair(x);
    CHECK(p.value == airy::ai(x));
    CHECK(p.deriv == airy::ai_deriv(x));
  }
}

TEST_CASE("finite differences of ai match ai_deriv") {
  const double h = 1e-5;
  const double fd = (airy::ai(1.0 + h) - airy::ai(1.0 - h)) / (2 * h);
  CHECK(std::fabs(fd - airy::ai_deriv(1.0)) < 1e-7);
}

TEST_CASE("second difference of ai obeys the Airy equation") {
  const double h = 1e-4;
  double worst = 0.0;
  for (int i = 0; i <= 150; ++i) {
    const double x = -10.0 + 0.1 * i;
    const double d2 = (airy::ai(x + h) - 2 * airy::ai(x) + airy::ai(x - h)) / (h * h);
    worst = std::max(worst, std::fabs(d2 - x * airy::ai(x)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("ai is positive to the right of the first zero") {
  const double g1 = airy::gamma1();
  for (double x = g1 + 1e-3; x <= 40.0; x += 0.01) {
    REQUIRE(airy::ai(x) > 0.0);
  }
}

TEST_CASE("decaying asymptotic law") {
  double prev_gap = 1.0;
  for (double x : {5.0, 8.0, 10.0, 15.0}) {
    const double r = 2 * std::sqrt(std::numbers::pi) * std::pow(x, 0.25) *
                     std::exp(2.0 / 3.0 * std::pow(x, 1.5)) * airy::ai(x);
    CHECK(r >= 0.98);
    CHECK(r <= 1.02);
    CHECK(std::fabs(r - 1) < prev_gap);
    prev_gap = std::fabs(r - 1);
  }
  const double x = 10.0;
  const double r = 2 * std::sqrt(std::numbers::pi) * std::pow(x, 0.25) *
                   std::exp(2.0 / 3.0 * std::pow(x, 1.5)) * airy::ai(x);
  CHECK(r == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("zeros") {
  CHECK(std::round(airy::airy_zero(1) * 1000) / 1000 == doctest::Approx(-2.338));
  CHECK(std::fabs(airy::airy_zero(2) + 4.0879494441) < 1e-9);
  CHECK(std::fabs(airy::ai_deriv_at_gamma1() - 0.7012108227) < 1e-9);
  for (int k = 1; k <= 10; ++k) CHECK(std::fabs(airy::ai(airy::airy_zero(k))) < 1e-10);
  for (int k = 1; k <= 50; ++k) {
    CHECK(airy::airy_zero(k) == doctest::Approx(boost::math::airy_ai_zero<double>(k)).epsilon(1e-12));
  }
}

TEST_CASE("zero table invariants") {
  const airy::AiryZeroTable table(50);
  CHECK(table.count() == 50);
  for (int k = 0; k < table.count(); ++k) {
    CHECK(table[k] < 0.0);
    CHECK(std::fabs(airy::ai(table[k])) < 1e-10);
    if (k > 0) CHECK(table[k] < table[k - 1]);
    // Ai' alternates in sign across consecutive zeros.
    if (k > 0) CHECK(airy::ai_deriv(table[k]) * airy::ai_deriv(table[k - 1]) < 0.0);
  }
  CHECK_THROWS_AS(airy::AiryZeroTable(0), std::out_of_range);
  CHECK_THROWS_AS(airy::AiryZeroTable(51), std::out_of_range);
}

TEST_CASE("domain and range errors") {
  CHECK_THROWS_AS(airy::ai(40.5), std::domain_error);
  CHECK_THROWS_AS(airy::ai(-40.5), std::domain_error);
  CHECK_THROWS_AS(airy::ai_deriv(NAN), std::domain_error);
  CHECK_THROWS_AS(airy::airy_zero(0), std::out_of_range);
  CHECK_THROWS_AS(airy::airy_zero(51), std::out_of_range);
  CHECK_NOTHROW(airy::ai(40.0));
  CHECK_NOTHROW(airy::ai(-40.0));
}
