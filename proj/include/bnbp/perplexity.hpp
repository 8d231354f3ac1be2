#pragma once

#include <span>
#include <vector>

#include "bnbp/corpus.hpp"

namespace bnbp {

// One posterior point estimate of topics and document-topic weights.
// phi is K x V (each row a distribution over terms), theta is J x K.
struct PosteriorDraw {
  int num_topics = 0;
  int num_terms = 0;
  int num_docs = 0;
  std::vector<double> phi;
  std::vector<double> theta;

  double phi_at(int k, int v) const { return phi[static_cast<std::size_t>(k) * num_terms + v]; }
  double theta_at(int j, int k) const { return theta[static_cast<std::size_t>(j) * num_topics + k]; }
};

// Per-word heldout perplexity accumulated over posterior draws s:
//
//   exp( -1/M sum_{v,j} m_vj ln [ sum_s sum_k phi_vk theta_jk /
//                                 sum_s sum_v sum_k phi_vk theta_jk ] )
//
// Draws are folded in one at a time, so they need not be kept in memory.
class PerplexityAccumulator {
 public:
  explicit PerplexityAccumulator(const TestCounts& test);

  void add(const PosteriorDraw& draw);
  std::size_t num_draws() const { return draws_; }
  // Throws std::logic_error before the first draw or with no test mass.
  double value() const;

 private:
  const TestCounts* test_;
  std::vector<std::vector<double>> numerator_;  // aligned with test entries
  std::vector<double> denominator_;             // per document
  std::size_t draws_ = 0;
};

double perplexity(const TestCounts& test, std::span<const PosteriorDraw> draws);

}  // namespace bnbp
