#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bnbp/special.hpp"

using namespace bnbp;

namespace {

void check_rel(double got, double want, double tol = 1e-12) {
  CHECK(std::abs(got - want) <= tol * std::abs(want));
}

}  // namespace

// Reference values: tests/oracles/special_values.py (mpmath, 40 digits).
TEST_CASE("digamma matches high-precision references") {
  check_rel(digamma(1.0), -0.57721566490153286061);
  check_rel(digamma(0.5), -1.9635100260214234794);
  check_rel(digamma(1e-3), -1000.5755719318103005);
  check_rel(digamma(7.25), 1.9104535268837360284);
  check_rel(digamma(10.3), 2.2828154464391225931);
  check_rel(digamma(123.456), 4.8118293238289853873);
  check_rel(digamma(1e6), 13.815510057964190771);
}

TEST_CASE("digamma recurrence") {
  CHECK(digamma(2.0) - digamma(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (double x : {0.013, 0.7, 3.3, 9.99, 10.01, 42.0}) {
    CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-12));
  }
}

TEST_CASE("trigamma matches high-precision references") {
  check_rel(trigamma(1.0), std::numbers::pi * std::numbers::pi / 6.0);
  check_rel(trigamma(0.25), 17.197329154507110739);
  check_rel(trigamma(3.5), 0.33035775610023486497);
  check_rel(trigamma(1e-3), 1000001.642533195869);
  check_rel(trigamma(50.0), 0.020201333226697125806);
}

TEST_CASE("ln_gamma matches references") {
  check_rel(ln_gamma(5.0), std::log(24.0));
  check_rel(ln_gamma(0.5), 0.57236494292470008707);
  check_rel(ln_gamma(1e-4), 9.2102826586339622105);
  check_rel(ln_gamma(2.5), 0.28468287047291915963);
  check_rel(ln_gamma(9.75), 12.242204940050762559);
  check_rel(ln_gamma(100.5), 361.43554046777762156);
  check_rel(ln_gamma(1e5), 1051287.7089736568949);
  CHECK(ln_gamma(1.0) == 0.0);
  CHECK(ln_gamma(2.0) == 0.0);
  // Near the roots at 1 and 2 the relative accuracy must hold as well.
  check_rel(ln_gamma(1.000001), -5.7721484238741466506e-7);
  check_rel(ln_gamma(0.9999999), 5.7721574684441928263e-8);
  check_rel(ln_gamma(2.0000003), 1.2683532953174931059e-7);
  check_rel(ln_gamma(1.4), -0.11961291417237129319);
  check_rel(ln_gamma(2.2), 0.096947466790638873178);
}

TEST_CASE("ln_factorial agrees with ln_gamma") {
  CHECK(ln_factorial(0) == 0.0);
  CHECK(ln_factorial(1) == 0.0);
  for (long long n : {2LL, 5LL, 17LL, 170LL, 5000LL}) {
    check_rel(ln_factorial(n), ln_gamma(static_cast<double>(n) + 1.0));
  }
}

TEST_CASE("special functions reject non-positive arguments") {
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-1.5), std::domain_error);
  CHECK_THROWS_AS(trigamma(0.0), std::domain_error);
  CHECK_THROWS_AS(ln_gamma(-2.0), std::domain_error);
  CHECK_THROWS_AS(ln_factorial(-1), std::domain_error);
}

TEST_CASE("log_add_exp") {
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(log_add_exp(ninf, 1.5) == 1.5);
  CHECK(log_add_exp(-2.0, ninf) == -2.0);
  CHECK(log_add_exp(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)).epsilon(1e-15));
  CHECK(log_add_exp(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
}
