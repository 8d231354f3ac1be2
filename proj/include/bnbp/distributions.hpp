#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bnbp/rng.hpp"

namespace bnbp {

// ---------------------------------------------------------------------------
// Base samplers. Gamma is parameterized by shape and scale everywhere in the
// library; call sites holding a rate convert explicitly.
// ---------------------------------------------------------------------------

double sample_gamma(RngStream& rng, double shape, double scale);

// Many gamma draws through one std::gamma_distribution, which keeps its
// spare normal deviate between calls. The cached deviate is not part of the
// RngStream state, so instances should live only inside one operation.
class GammaBatch {
 public:
  explicit GammaBatch(RngStream& rng) : rng_(&rng) {}
  double operator()(double shape, double scale);

 private:
  RngStream* rng_;
  std::gamma_distribution<double> dist_;
};
double sample_exponential(RngStream& rng, double rate);
std::uint64_t sample_poisson(RngStream& rng, double mean);
std::uint64_t sample_binomial(RngStream& rng, std::uint64_t trials, double p);

struct BetaDraw {
  double p;
  double log_one_minus_p;  // ln(1 - p), accurate even when p rounds to 1
};

BetaDraw sample_beta_draw(RngStream& rng, double a, double b);
double sample_beta(RngStream& rng, double a, double b);

// Fills `out` with a Dirichlet(alpha) draw.
void sample_dirichlet(RngStream& rng, std::span<const double> alpha, std::span<double> out);
std::vector<double> sample_dirichlet(RngStream& rng, std::span<const double> alpha);

// Index drawn proportionally to nonnegative `weights`.
std::size_t sample_categorical(RngStream& rng, std::span<const double> weights);

// Index drawn proportionally to exp(log_weights), normalized with log-sum-exp.
// Entries equal to -inf are never selected.
std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights);

// log of sum(exp(values)); -inf for an empty span.
double log_sum_exp(std::span<const double> values);

// ---------------------------------------------------------------------------
// Digamma distribution on {1, 2, ...}:
//   Digam(n | r, c) = Gamma(r+n) Gamma(c+r) / (n Gamma(c+n+r) Gamma(r)) / (psi(c+r) - psi(c))
// ---------------------------------------------------------------------------

double digam_log_pmf(std::int64_t n, double r, double c);
double digam_pmf(std::int64_t n, double r, double c);

// Inverse-CDF draw. The support is capped where the accumulated mass
// reaches 1 - kDigamTailMass.
std::int64_t digam_sample(double r, double c, RngStream& rng);
inline constexpr double kDigamTailMass = 1e-12;

// ---------------------------------------------------------------------------
// Dirichlet-multinomial over J groups.
// ---------------------------------------------------------------------------

double dirmult_log_pmf(std::span<const int> counts, std::span<const double> r);
std::vector<int> dirmult_sample(int total, std::span<const double> r, RngStream& rng);

// ---------------------------------------------------------------------------
// logBeta(mass, concentration): the law of Q = -sum_k ln(1 - p_k) over the
// atoms of a beta process, with Laplace transform
//   E[exp(-s Q)] = exp{-mass [psi(concentration + s) - psi(concentration)]}.
// ---------------------------------------------------------------------------

struct LogBetaParams {
  double mass;
  double concentration;
};

double logbeta_sample(const LogBetaParams& params, RngStream& rng);

// Log of the Laplace transform above; used by tests and diagnostics.
double logbeta_log_laplace(const LogBetaParams& params, double s);

// Chinese restaurant table count: sum_{t=1}^{n} Bernoulli(r / (r + t - 1)).
std::int64_t crt_sum_sample(std::int64_t n, double r, RngStream& rng);

}  // namespace bnbp
