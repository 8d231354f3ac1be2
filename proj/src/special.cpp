#include "bnbp/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace bnbp {

namespace {

// Below this the recurrences shift the argument up before the asymptotic
// series are applied; the truncated series error at 10 is below 1e-16.
constexpr double kAsymptoticThreshold = 10.0;

constexpr double kHalfLogTwoPi = 0.91893853320467274178;
constexpr double kEulerGamma = 0.57721566490153286061;

// zeta(k) - 1 for k = 2..30.
constexpr double kZetaMinusOne[] = {
    0.64493406684822643647, 0.2020569031595942854,  0.082323233711138191516, 0.036927755143369926331,
    0.017343061984449139715, 0.0083492773819228268398, 0.0040773561979443393787, 0.0020083928260822144179,
    0.00099457512781808533715, 0.0004941886041194645587, 0.00024608655330804829864, 0.00012271334757848914675,
    6.1248135058704829259e-5, 3.0588236307020493552e-5, 1.5282259408651871733e-5, 7.6371976378997622736e-6,
    3.8172932649998398565e-6, 1.9082127165539389257e-6, 9.5396203387279611315e-7, 4.7693298678780646312e-7,
    2.3845050272773299e-7,   1.1921992596531107307e-7, 5.9608189051259479612e-8, 2.9803503514652280186e-8,
    1.4901554828365041235e-8, 7.450711789835429492e-9, 3.7253340247884570548e-9, 1.8626597235130490064e-9,
    9.3132743241966818287e-10};

// ln Gamma(1 + z) for |z| <= 1/2 from its Taylor series about 1, which keeps
// full relative accuracy near the roots at 1 and 2.
double ln_gamma_near_one(double z) {
  double acc = 0.0;
  double power = -z;
  for (int k = 2; k <= 30; ++k) {
    power *= -z;
    acc += kZetaMinusOne[k - 2] * power / k;
  }
  return acc + z * (1.0 - kEulerGamma) - std::log1p(z);
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error(std::string(what) + ": argument must be positive and finite");
  }
}

}  // namespace

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < kAsymptoticThreshold) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi(x) ~ ln x - 1/(2x) - sum_k B_{2k} / (2k x^{2k})
  const double series =
      inv2 * (1.0 / 12 -
      inv2 * (1.0 / 120 -
      inv2 * (1.0 / 252 -
      inv2 * (1.0 / 240 -
      inv2 * (1.0 / 132 -
      inv2 * (691.0 / 32760 -
      inv2 * (1.0 / 12)))))));
  return shift + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double shift = 0.0;
  while (x < kAsymptoticThreshold) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi'(x) ~ 1/x + 1/(2x^2) + sum_k B_{2k} / x^{2k+1}
  const double series =
      inv * inv2 * (1.0 / 6 -
      inv2 * (1.0 / 30 -
      inv2 * (1.0 / 42 -
      inv2 * (1.0 / 30 -
      inv2 * (5.0 / 66 -
      inv2 * (691.0 / 2730 -
      inv2 * (7.0 / 6)))))));
  return shift + inv + 0.5 * inv2 + series;
}

double ln_gamma(double x) {
  require_positive(x, "ln_gamma");
  if (x >= 0.5 && x <= 1.5) return ln_gamma_near_one(x - 1.0);
  if (x > 1.5 && x <= 2.5) return std::log1p(x - 2.0) + ln_gamma_near_one(x - 2.0);
  double log_shift = 0.0;
  if (x < kAsymptoticThreshold) {
    double product = 1.0;
    while (x < kAsymptoticThreshold) {
      product *= x;
      x += 1.0;
    }
    log_shift = std::log(product);
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Stirling series with Bernoulli coefficients B_{2k} / (2k (2k-1)).
  const double series =
      inv * (1.0 / 12 -
      inv2 * (1.0 / 360 -
      inv2 * (1.0 / 1260 -
      inv2 * (1.0 / 1680 -
      inv2 * (1.0 / 1188 -
      inv2 * (691.0 / 360360 -
      inv2 * (1.0 / 156)))))));
  return (x - 0.5) * std::log(x) - x + kHalfLogTwoPi + series - log_shift;
}

double ln_factorial(long long n) {
  if (n < 0) throw std::domain_error("ln_factorial: negative argument");
  if (n < 2) return 0.0;
  return ln_gamma(static_cast<double>(n) + 1.0);
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

}  // namespace bnbp
