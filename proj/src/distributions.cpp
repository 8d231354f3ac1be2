#include "bnbp/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "bnbp/special.hpp"

namespace bnbp {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

void require(bool ok, const char* message) {
  if (!ok) throw std::domain_error(message);
}

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

double sample_gamma(RngStream& rng, double shape, double scale) {
  require(positive_finite(shape) && positive_finite(scale), "sample_gamma: shape and scale must be positive");
  std::gamma_distribution<double> dist(shape, scale);
  return dist(rng.engine());
}

double GammaBatch::operator()(double shape, double scale) {
  require(positive_finite(shape) && positive_finite(scale), "sample_gamma: shape and scale must be positive");
  return dist_(rng_->engine(), std::gamma_distribution<double>::param_type(shape, scale));
}

double sample_exponential(RngStream& rng, double rate) {
  require(positive_finite(rate), "sample_exponential: rate must be positive");
  return -std::log(rng.uniform_open()) / rate;
}

std::uint64_t sample_poisson(RngStream& rng, double mean) {
  require(mean >= 0.0 && std::isfinite(mean), "sample_poisson: mean must be nonnegative");
  if (mean == 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return static_cast<std::uint64_t>(dist(rng.engine()));
}

std::uint64_t sample_binomial(RngStream& rng, std::uint64_t trials, double p) {
  require(p >= 0.0 && p <= 1.0, "sample_binomial: p must lie in [0, 1]");
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  std::binomial_distribution<std::int64_t> dist(static_cast<std::int64_t>(trials), p);
  return static_cast<std::uint64_t>(dist(rng.engine()));
}

BetaDraw sample_beta_draw(RngStream& rng, double a, double b) {
  require(positive_finite(a) && positive_finite(b), "sample_beta: shapes must be positive");
  double x = sample_gamma(rng, a, 1.0);
  double y = sample_gamma(rng, b, 1.0);
  // Both gammas can underflow for very small shapes; fall back to the
  // smallest representable value so that p stays inside (0, 1).
  x = std::max(x, kTiny);
  y = std::max(y, kTiny);
  const double sum = x + y;
  BetaDraw draw;
  draw.p = x / sum;
  draw.log_one_minus_p = std::log(y) - std::log(sum);
  if (draw.p >= 1.0) draw.p = std::nextafter(1.0, 0.0);
  return draw;
}

double sample_beta(RngStream& rng, double a, double b) { return sample_beta_draw(rng, a, b).p; }

void sample_dirichlet(RngStream& rng, std::span<const double> alpha, std::span<double> out) {
  if (alpha.size() != out.size()) throw std::invalid_argument("sample_dirichlet: size mismatch");
  if (alpha.empty()) throw std::invalid_argument("sample_dirichlet: empty parameter vector");
  GammaBatch gamma(rng);
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = gamma(alpha[i], 1.0);
    sum += out[i];
  }
  if (sum > 0.0) {
    for (double& x : out) x /= sum;
    return;
  }
  // Every gamma underflowed (all shapes tiny). The limit of the Dirichlet as
  // the total concentration vanishes puts all mass on a single coordinate
  // chosen proportionally to alpha.
  std::fill(out.begin(), out.end(), 0.0);
  out[sample_categorical(rng, alpha)] = 1.0;
}

std::vector<double> sample_dirichlet(RngStream& rng, std::span<const double> alpha) {
  std::vector<double> out(alpha.size());
  sample_dirichlet(rng, alpha, out);
  return out;
}

std::size_t sample_categorical(RngStream& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::domain_error("sample_categorical: negative or NaN weight");
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::domain_error("sample_categorical: weights must have a positive finite sum");
  }
  const double target = rng.uniform() * total;
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cum += weights[i];
    last_positive = i;
    if (target < cum) return i;
  }
  return last_positive;
}

double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights) {
  const double norm = log_sum_exp(log_weights);
  if (!std::isfinite(norm)) throw std::domain_error("sample_categorical_log: no finite weight");
  std::vector<double> weights(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) weights[i] = std::exp(log_weights[i] - norm);
  return sample_categorical(rng, weights);
}

// ---------------------------------------------------------------------------

double digam_log_pmf(std::int64_t n, double r, double c) {
  if (n < 1) throw std::domain_error("digam_pmf: support starts at n = 1");
  require(positive_finite(r) && positive_finite(c), "digam_pmf: r and c must be positive");
  const double nn = static_cast<double>(n);
  const double norm = digamma(c + r) - digamma(c);
  return ln_gamma(r + nn) + ln_gamma(c + r) - std::log(nn) - ln_gamma(c + nn + r) - ln_gamma(r) -
         std::log(norm);
}

double digam_pmf(std::int64_t n, double r, double c) { return std::exp(digam_log_pmf(n, r, c)); }

std::int64_t digam_sample(double r, double c, RngStream& rng) {
  require(positive_finite(r) && positive_finite(c), "digam_sample: r and c must be positive");
  const double target = std::min(rng.uniform(), 1.0 - kDigamTailMass);
  // pmf(1) = r / ((c + r)(psi(c + r) - psi(c))), then
  // pmf(n + 1) / pmf(n) = (r + n) n / ((n + 1)(c + n + r)).
  double pmf = r / ((c + r) * (digamma(c + r) - digamma(c)));
  double cum = 0.0;
  double carry = 0.0;  // Kahan compensation
  // Past `tail_start` the pmf is within O((r + c) / n) of a power law
  // pmf(n) ~ A n^(-1-c), whose survival A n^(-c) / c is inverted directly.
  const double tail_start = std::max(1e6, 1e3 * (r + c));
  std::int64_t n = 1;
  for (;;) {
    const double y = pmf - carry;
    const double t = cum + y;
    carry = (t - cum) - y;
    cum = t;
    if (cum > target || pmf <= 0.0) return n;
    const double nn = static_cast<double>(n);
    if (nn >= tail_start) {
      const double survival = pmf * nn / c;
      const double left = std::max(1.0 - target, kDigamTailMass);
      const double x = nn * std::pow(std::max(survival / left, 1.0), 1.0 / c);
      return x >= 9e18 ? std::numeric_limits<std::int64_t>::max() : std::max(n + 1, static_cast<std::int64_t>(x));
    }
    pmf *= (r + nn) * nn / ((nn + 1.0) * (c + nn + r));
    ++n;
  }
}

// ---------------------------------------------------------------------------

double dirmult_log_pmf(std::span<const int> counts, std::span<const double> r) {
  if (counts.size() != r.size()) throw std::invalid_argument("dirmult_log_pmf: length mismatch");
  long long total = 0;
  double r_dot = 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0) throw std::invalid_argument("dirmult_log_pmf: negative count");
    require(positive_finite(r[j]), "dirmult_log_pmf: r must be positive");
    total += counts[j];
    r_dot += r[j];
    acc += ln_gamma(counts[j] + r[j]) - ln_gamma(r[j]) - ln_factorial(counts[j]);
  }
  return acc + ln_factorial(total) + ln_gamma(r_dot) - ln_gamma(static_cast<double>(total) + r_dot);
}

std::vector<int> dirmult_sample(int total, std::span<const double> r, RngStream& rng) {
  if (r.empty()) throw std::invalid_argument("dirmult_sample: empty parameter vector");
  if (total < 0) throw std::invalid_argument("dirmult_sample: negative total");
  std::vector<int> counts(r.size(), 0);
  if (total == 0) return counts;
  if (r.size() == 1) {
    counts[0] = total;
    return counts;
  }
  const std::vector<double> probs = sample_dirichlet(rng, r);
  // Multinomial allocation by sequential conditional binomials.
  std::uint64_t remaining = static_cast<std::uint64_t>(total);
  double mass_left = 1.0;
  for (std::size_t j = 0; j + 1 < probs.size() && remaining > 0; ++j) {
    const double p = mass_left > 0.0 ? std::clamp(probs[j] / mass_left, 0.0, 1.0) : 1.0;
    const std::uint64_t take = sample_binomial(rng, remaining, p);
    counts[j] = static_cast<int>(take);
    remaining -= take;
    mass_left -= probs[j];
  }
  counts.back() += static_cast<int>(remaining);
  return counts;
}

// ---------------------------------------------------------------------------

namespace {

// Jump classes below this index are simulated one class at a time.
constexpr std::int64_t kExplicitClasses = 64;
// Truncation: the deterministic tail mean left out of the series.
constexpr double kLogBetaTailMean = 1e-8;

}  // namespace

double logbeta_log_laplace(const LogBetaParams& params, double s) {
  return -params.mass * (digamma(params.concentration + s) - digamma(params.concentration));
}

double logbeta_sample(const LogBetaParams& params, RngStream& rng) {
  require(positive_finite(params.mass) && positive_finite(params.concentration),
          "logbeta_sample: mass and concentration must be positive");
  const double gamma0 = params.mass;
  const double c = params.concentration;

  // The Levy density exp(-q c) / (1 - exp(-q)) = sum_{n>=0} exp(-q (c + n)):
  // class n contributes Pois(gamma0 / (c + n)) jumps, each Exp(c + n).
  // Classes beyond `last` are replaced by their mean gamma0 * psi'(c + last + 1).
  std::int64_t last = kExplicitClasses;
  while (gamma0 * trigamma(c + static_cast<double>(last) + 1.0) >= kLogBetaTailMean) last *= 2;

  double q = gamma0 * trigamma(c + static_cast<double>(last) + 1.0);

  for (std::int64_t n = 0; n < kExplicitClasses; ++n) {
    const double rate = c + static_cast<double>(n);
    const std::uint64_t jumps = sample_poisson(rng, gamma0 / rate);
    if (jumps > 0) q += sample_gamma(rng, static_cast<double>(jumps), 1.0 / rate);
  }

  // Classes kExplicitClasses..last, pooled: the total jump count is Poisson
  // with mean gamma0 [psi(c + last + 1) - psi(c + kExplicitClasses)], and each
  // jump's class n has probability proportional to 1 / (c + n). The class is
  // drawn by rejection from the continuous density 1 / (c + x) on
  // [kExplicitClasses, last + 1), whose cell masses are log1p(1 / (c + n)).
  const double lo = c + static_cast<double>(kExplicitClasses);
  const double hi = c + static_cast<double>(last) + 1.0;
  const double pooled_mean = gamma0 * (digamma(hi) - digamma(lo));
  const std::uint64_t pooled = sample_poisson(rng, std::max(pooled_mean, 0.0));
  const double log_span = std::log(hi / lo);
  auto ratio = [](double a) { return (1.0 / a) / std::log1p(1.0 / a); };
  const double bound = ratio(lo);
  for (std::uint64_t m = 0; m < pooled; ++m) {
    double a;
    for (;;) {
      const double x = lo * std::exp(rng.uniform() * log_span);
      a = std::min(std::floor(x - c) + c, hi - 1.0);
      if (rng.uniform() * bound < ratio(a)) break;
    }
    q += sample_exponential(rng, a);
  }
  return q;
}

// ---------------------------------------------------------------------------

std::int64_t crt_sum_sample(std::int64_t n, double r, RngStream& rng) {
  if (n < 0) throw std::domain_error("crt_sum_sample: negative count");
  require(positive_finite(r), "crt_sum_sample: r must be positive");
  if (n == 0) return 0;
  std::int64_t tables = 1;  // t = 1 succeeds with probability r / r
  for (std::int64_t t = 2; t <= n; ++t) {
    if (rng.uniform() * (r + static_cast<double>(t - 1)) < r) ++tables;
  }
  return tables;
}

}  // namespace bnbp
