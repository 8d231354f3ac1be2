#include "bnbp/perplexity.hpp"

#include <cmath>
#include <stdexcept>

namespace bnbp {

PerplexityAccumulator::PerplexityAccumulator(const TestCounts& test)
    : test_(&test), numerator_(test.docs.size()), denominator_(test.docs.size(), 0.0) {
  if (test.total() <= 0) throw std::invalid_argument("perplexity: test set has zero mass");
  for (std::size_t j = 0; j < test.docs.size(); ++j) numerator_[j].assign(test.docs[j].size(), 0.0);
}

void PerplexityAccumulator::add(const PosteriorDraw& draw) {
  if (draw.num_docs != static_cast<int>(test_->docs.size()) || draw.num_terms != test_->num_terms) {
    throw std::invalid_argument("perplexity: posterior draw does not match the test counts");
  }
  const int K = draw.num_topics;
  const auto V = static_cast<std::size_t>(draw.num_terms);
  std::vector<double> phi_mass(static_cast<std::size_t>(K), 0.0);
  // Term-major copy so each test entry reads one contiguous row.
  std::vector<double> phi_by_term(V * static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    for (std::size_t v = 0; v < V; ++v) {
      const double x = draw.phi_at(k, static_cast<int>(v));
      phi_mass[k] += x;
      phi_by_term[v * K + k] = x;
    }
  }
  for (std::size_t j = 0; j < test_->docs.size(); ++j) {
    const auto& entries = test_->docs[j];
    if (entries.empty()) continue;
    const double* theta = draw.theta.data() + j * static_cast<std::size_t>(K);
    double norm = 0.0;
    for (int k = 0; k < K; ++k) norm += phi_mass[k] * theta[k];
    denominator_[j] += norm;
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const double* phi = phi_by_term.data() + static_cast<std::size_t>(entries[e].term) * K;
      double part[4] = {0.0, 0.0, 0.0, 0.0};
      int k = 0;
      for (; k + 4 <= K; k += 4) {
        for (int l = 0; l < 4; ++l) part[l] += phi[k + l] * theta[k + l];
      }
      for (; k < K; ++k) part[0] += phi[k] * theta[k];
      numerator_[j][e] += (part[0] + part[1]) + (part[2] + part[3]);
    }
  }
  ++draws_;
}

double PerplexityAccumulator::value() const {
  if (draws_ == 0) throw std::logic_error("perplexity: no posterior draws");
  double log_lik = 0.0;
  std::int64_t mass = 0;
  for (std::size_t j = 0; j < test_->docs.size(); ++j) {
    const auto& entries = test_->docs[j];
    for (std::size_t e = 0; e < entries.size(); ++e) {
      log_lik += entries[e].count * std::log(numerator_[j][e] / denominator_[j]);
      mass += entries[e].count;
    }
  }
  return std::exp(-log_lik / static_cast<double>(mass));
}

double perplexity(const TestCounts& test, std::span<const PosteriorDraw> draws) {
  PerplexityAccumulator acc(test);
  for (const auto& d : draws) acc.add(d);
  return acc.value();
}

}  // namespace bnbp
