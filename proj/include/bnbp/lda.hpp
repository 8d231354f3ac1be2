#pragma once

#include <vector>

#include "bnbp/corpus.hpp"
#include "bnbp/perplexity.hpp"
#include "bnbp/rng.hpp"
#include "bnbp/topic_model.hpp"
#include "bnbp/trace.hpp"

namespace bnbp {

// Collapsed Gibbs state of LDA with a fixed number of topics K and a
// symmetric Dirichlet(alpha / K) prior on document proportions.
class LdaState {
 public:
  static constexpr int kUnassigned = -1;

  // Labels drawn uniformly at random.
  LdaState(const Corpus& corpus, int num_topics, double alpha, double eta, RngStream& rng);
  LdaState(const Corpus& corpus, int num_topics, double alpha, double eta,
           const std::vector<std::vector<int>>& topics);

  std::size_t num_docs() const { return doc_offset_.size() - 1; }
  int num_terms() const { return num_terms_; }
  int num_topics() const { return num_topics_; }
  double alpha() const { return alpha_; }
  double eta() const { return eta_; }
  int doc_length(std::size_t j) const { return static_cast<int>(doc_offset_[j + 1] - doc_offset_[j]); }
  int term(std::size_t j, std::size_t i) const { return term_[doc_offset_[j] + i]; }
  int topic(std::size_t j, std::size_t i) const { return topic_[doc_offset_[j] + i]; }
  int doc_topic(std::size_t j, int k) const { return doc_topic_[j * num_topics_ + k]; }
  int term_topic(int v, int k) const { return term_topic_[static_cast<std::size_t>(v) * num_topics_ + k]; }
  int topic_total(int k) const { return topic_total_[k]; }
  std::vector<std::vector<int>> topic_labels() const;

  void remove_token(std::size_t j, std::size_t i);
  void add_token(std::size_t j, std::size_t i, int k);
  void check_invariants() const;
  void sweep(RngStream& rng);

 private:
  void init_tokens(const Corpus& corpus);
  void decrement(std::size_t t);
  void increment(std::size_t t, int k);

  int num_terms_ = 0;
  int num_topics_ = 0;
  double alpha_ = 0.0;
  double eta_ = 0.0;
  std::vector<std::size_t> doc_offset_;
  std::vector<int> doc_of_;
  std::vector<int> term_;
  std::vector<int> topic_;
  std::vector<int> doc_topic_;   // J x K
  std::vector<int> term_topic_;  // V x K
  std::vector<int> topic_total_;
  std::vector<std::size_t> order_;
  std::vector<double> cumulative_;
};

// weight_k = (eta + n_{v.k}) / (V eta + n_{.k}) * (n_jk + alpha / K) for a
// removed token.
std::vector<double> lda_token_conditional(const LdaState& state, std::size_t j, std::size_t i);

// phi_k ~ Dir(eta + n_{v.k}), theta_j ~ Dir(n_jk + alpha / K).
PosteriorDraw lda_posterior_draw(const LdaState& state, RngStream& rng);

struct LdaTrainConfig {
  int num_topics = 50;
  double alpha = 1.0;
  double eta = 0.05;
  int iterations = 2500;
  int collect = 1500;
  int thin = 1;

  void validate() const;
};

struct LdaTrainResult {
  ChainTrace trace;  // K_J column is constant; gamma0, c and r_dot are zero
  LdaState state;
  int draws_collected = 0;
};

LdaTrainResult lda_train(const Corpus& corpus, const LdaTrainConfig& config, RngStream& rng,
                         const DrawSink& sink = {});

}  // namespace bnbp
