#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bnbp/corpus.hpp"
#include "bnbp/partition.hpp"
#include "bnbp/perplexity.hpp"
#include "bnbp/rng.hpp"
#include "bnbp/trace.hpp"

namespace bnbp {

// Gamma(shape, 1/rate) hyperpriors on r_j (a0, b0) and gamma0 (e0, f0).
struct Hyperpriors {
  double a0 = 0.01;
  double b0 = 0.01;
  double e0 = 0.01;
  double f0 = 0.01;
};

// Sampler state of the BNBP topic model: token topic labels, the three
// count tables and the model parameters.
//
// Topics live in slots. A slot whose last token leaves is freed at once
// (it stops counting towards K_J and gets zero weight) and is reused by the
// next new topic; compact() renumbers live topics densely in slot order and
// runs at the end of every sweep. Doc-topic and term-topic tables are dense
// row-major with a shared slot capacity.
class TopicModelState {
 public:
  static constexpr int kUnassigned = -1;

  // Every token starts in one shared topic.
  TopicModelState(const Corpus& corpus, double eta, BnbpParams params);
  // Explicit labels, compact from 0.
  TopicModelState(const Corpus& corpus, double eta, BnbpParams params,
                  const std::vector<std::vector<int>>& topics);

  std::size_t num_docs() const { return doc_offset_.size() - 1; }
  int num_terms() const { return num_terms_; }
  std::size_t num_tokens() const { return term_.size(); }
  int doc_length(std::size_t j) const { return static_cast<int>(doc_offset_[j + 1] - doc_offset_[j]); }
  int term(std::size_t j, std::size_t i) const { return term_[doc_offset_[j] + i]; }
  int topic(std::size_t j, std::size_t i) const { return topic_[doc_offset_[j] + i]; }

  int num_topics() const { return live_; }  // K_J
  int num_slots() const { return slots_; }
  bool is_compact() const { return live_ == slots_; }
  bool slot_live(int k) const { return topic_total_[k] > 0; }
  int doc_topic(std::size_t j, int k) const { return doc_topic_[j * capacity_ + k]; }
  int term_topic(int v, int k) const { return term_topic_[static_cast<std::size_t>(v) * capacity_ + k]; }
  int topic_total(int k) const { return topic_total_[k]; }

  double eta() const { return eta_; }
  const BnbpParams& params() const { return params_; }
  void set_gamma0(double gamma0);
  void set_c(double c);
  void set_r(std::vector<double> r);

  // Latest draws from the parameter updates. Per-slot values are NaN for a
  // topic created after the last draw.
  double q_rest() const { return q_rest_; }
  double p(int k) const { return p_[k]; }
  double log_one_minus_p(int k) const { return log1m_p_[k]; }
  int table_count(std::size_t j, int k) const { return table_count_[j * table_width_ + k]; }

  void set_q_rest(double q) { q_rest_ = q; }
  void set_topic_weight(int k, double p, double log_one_minus_p);

  // Single-token moves for callers outside the sweep; remove_token leaves
  // the token unassigned and add_token with k == num_slots() opens a topic.
  void remove_token(std::size_t j, std::size_t i);
  void add_token(std::size_t j, std::size_t i, int k);

  void compact();
  // J x K_J doc-topic counts over live topics in slot order.
  CountMatrix doc_topic_matrix() const;
  std::vector<std::vector<int>> topic_labels() const;

  // Recounts every table from the labels; throws std::logic_error on drift.
  void check_invariants() const;

  // One collapsed Gibbs pass over all tokens in a fresh random order.
  void sweep(RngStream& rng);

 private:
  void init_tokens(const Corpus& corpus);
  void grow(int new_capacity);
  int open_slot();
  void refresh_topic_factor(int k);
  void refresh_topic_factors();
  void decrement(std::size_t token);
  void increment(std::size_t token, int k);

  int num_terms_ = 0;
  double eta_ = 0.0;
  BnbpParams params_;
  double r_dot_ = 0.0;

  std::vector<std::size_t> doc_offset_;
  std::vector<int> doc_of_;
  std::vector<int> term_;
  std::vector<int> topic_;

  int capacity_ = 0;
  int slots_ = 0;
  int live_ = 0;
  std::vector<int> free_slots_;
  std::vector<int> doc_topic_;   // J x capacity
  std::vector<int> term_topic_;  // V x capacity
  std::vector<int> topic_total_;
  // n_k / ((V eta + n_k)(c + n_k + r.)), zero for free slots.
  std::vector<double> topic_factor_;

  double q_rest_ = 0.0;
  std::vector<double> p_;
  std::vector<double> log1m_p_;
  std::vector<int> table_count_;  // J x table_width_ at the last update
  std::size_t table_width_ = 0;

  std::vector<std::size_t> order_;
  std::vector<double> cumulative_;

  friend void update_hyperparameters(TopicModelState&, const Hyperpriors&, RngStream&);
};

// Unnormalized collapsed conditional of token (j, i), which must have been
// removed: entries follow slot order over live topics, the last entry opens
// a new topic.
std::vector<double> token_conditional(const TopicModelState& state, std::size_t j, std::size_t i);

void gibbs_sweep(TopicModelState& state, RngStream& rng);

// gamma0, then p_k and Q(rest), then CRT table counts l_jk, then r_j.
void update_hyperparameters(TopicModelState& state, const Hyperpriors& hyper, RngStream& rng);

// Redraws only p_k ~ Beta(n_k, c + r.) for every live topic.
void draw_topic_weights(TopicModelState& state, RngStream& rng);

// c = (1 - u) / u for u = 0.01, 0.02, ..., 0.99.
std::vector<double> concentration_grid();
// Normalized log posterior of c on the grid, proportional to the ECPF.
std::vector<double> concentration_log_posterior(const TopicModelState& state);
void sample_concentration_c(TopicModelState& state, RngStream& rng);

// phi_k ~ Dir(eta + n_{v.k}) over terms and theta_jk ~ Gamma(n_jk + r_j, scale p_k)
// for the live topics. Requires a compact state with current p_k.
PosteriorDraw posterior_point_draw(const TopicModelState& state, RngStream& rng);

struct BnbpTrainConfig {
  double eta = 0.05;
  Hyperpriors hyper;
  int iterations = 2500;
  int collect = 1500;  // posterior draws come from the last `collect` iterations
  int thin = 1;
  double init_gamma0 = 1.0;
  double init_c = 1.0;
  double init_r = 1.0;
  bool sample_c = true;

  void validate() const;
};

using DrawSink = std::function<void(int iter, const PosteriorDraw&)>;

struct BnbpTrainResult {
  ChainTrace trace;
  TopicModelState state;
  int draws_collected = 0;
};

// Each iteration: sweep, parameter updates, a posterior draw when inside
// the collection window, then the griddy-Gibbs step for c.
BnbpTrainResult train(const Corpus& corpus, const BnbpTrainConfig& config, RngStream& rng,
                      const DrawSink& sink = {});

}  // namespace bnbp
