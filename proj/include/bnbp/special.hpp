#pragma once

namespace bnbp {

// Digamma function psi(x) = Gamma'(x) / Gamma(x) for x > 0.
double digamma(double x);

// Trigamma function psi'(x) for x > 0.
double trigamma(double x);

// ln Gamma(x) for x > 0.
double ln_gamma(double x);

// ln(n!) for n >= 0.
double ln_factorial(long long n);

// log(exp(a) + exp(b)) without overflow; -inf is the identity.
double log_add_exp(double a, double b);

}  // namespace bnbp
