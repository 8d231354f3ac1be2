#include "bnbp/lda.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bnbp/distributions.hpp"

namespace bnbp {

void LdaState::init_tokens(const Corpus& corpus) {
  corpus.validate();
  if (num_topics_ < 1) throw std::invalid_argument("LDA: need at least one topic");
  if (!(alpha_ > 0.0) || !(eta_ > 0.0)) throw std::invalid_argument("LDA: alpha and eta must be positive");
  num_terms_ = corpus.num_terms;
  doc_offset_.assign(1, 0);
  for (std::size_t j = 0; j < corpus.num_docs(); ++j) {
    for (int v : corpus.docs[j]) {
      doc_of_.push_back(static_cast<int>(j));
      term_.push_back(v);
    }
    doc_offset_.push_back(term_.size());
  }
  topic_.assign(term_.size(), kUnassigned);
  const auto K = static_cast<std::size_t>(num_topics_);
  doc_topic_.assign(corpus.num_docs() * K, 0);
  term_topic_.assign(static_cast<std::size_t>(num_terms_) * K, 0);
  topic_total_.assign(K, 0);
  cumulative_.assign(K, 0.0);
}

LdaState::LdaState(const Corpus& corpus, int num_topics, double alpha, double eta, RngStream& rng)
    : num_topics_(num_topics), alpha_(alpha), eta_(eta) {
  init_tokens(corpus);
  for (std::size_t t = 0; t < term_.size(); ++t) {
    increment(t, static_cast<int>(rng.below(static_cast<std::uint64_t>(num_topics_))));
  }
}

LdaState::LdaState(const Corpus& corpus, int num_topics, double alpha, double eta,
                   const std::vector<std::vector<int>>& topics)
    : num_topics_(num_topics), alpha_(alpha), eta_(eta) {
  init_tokens(corpus);
  if (topics.size() != num_docs()) throw std::invalid_argument("LDA: label shape mismatch");
  for (std::size_t j = 0; j < topics.size(); ++j) {
    if (static_cast<int>(topics[j].size()) != doc_length(j)) throw std::invalid_argument("LDA: label shape mismatch");
    for (std::size_t i = 0; i < topics[j].size(); ++i) {
      const int k = topics[j][i];
      if (k < 0 || k >= num_topics_) throw std::invalid_argument("LDA: topic label out of range");
      increment(doc_offset_[j] + i, k);
    }
  }
}

void LdaState::decrement(std::size_t t) {
  const int k = topic_[t];
  --doc_topic_[static_cast<std::size_t>(doc_of_[t]) * num_topics_ + k];
  --term_topic_[static_cast<std::size_t>(term_[t]) * num_topics_ + k];
  --topic_total_[k];
  topic_[t] = kUnassigned;
}

void LdaState::increment(std::size_t t, int k) {
  ++doc_topic_[static_cast<std::size_t>(doc_of_[t]) * num_topics_ + k];
  ++term_topic_[static_cast<std::size_t>(term_[t]) * num_topics_ + k];
  ++topic_total_[k];
  topic_[t] = k;
}

void LdaState::remove_token(std::size_t j, std::size_t i) {
  const std::size_t t = doc_offset_.at(j) + i;
  if (topic_.at(t) == kUnassigned) throw std::logic_error("LDA: token already removed");
  decrement(t);
}

void LdaState::add_token(std::size_t j, std::size_t i, int k) {
  const std::size_t t = doc_offset_.at(j) + i;
  if (topic_.at(t) != kUnassigned) throw std::logic_error("LDA: token is still assigned");
  if (k < 0 || k >= num_topics_) throw std::out_of_range("LDA: topic out of range");
  increment(t, k);
}

std::vector<std::vector<int>> LdaState::topic_labels() const {
  std::vector<std::vector<int>> labels(num_docs());
  for (std::size_t j = 0; j < num_docs(); ++j) {
    labels[j].assign(topic_.begin() + static_cast<std::ptrdiff_t>(doc_offset_[j]),
                     topic_.begin() + static_cast<std::ptrdiff_t>(doc_offset_[j + 1]));
  }
  return labels;
}

void LdaState::check_invariants() const {
  const auto K = static_cast<std::size_t>(num_topics_);
  std::vector<int> doc_topic(num_docs() * K, 0);
  std::vector<int> term_topic(static_cast<std::size_t>(num_terms_) * K, 0);
  std::vector<int> totals(K, 0);
  for (std::size_t t = 0; t < topic_.size(); ++t) {
    const int k = topic_[t];
    if (k == kUnassigned) continue;
    ++doc_topic[static_cast<std::size_t>(doc_of_[t]) * K + k];
    ++term_topic[static_cast<std::size_t>(term_[t]) * K + k];
    ++totals[k];
  }
  if (doc_topic != doc_topic_ || term_topic != term_topic_ || totals != topic_total_) {
    throw std::logic_error("LDA: count table drift");
  }
}

void LdaState::sweep(RngStream& rng) {
  const std::size_t n = term_.size();
  order_.resize(n);
  for (std::size_t t = 0; t < n; ++t) order_[t] = t;
  for (std::size_t t = n; t > 1; --t) std::swap(order_[t - 1], order_[rng.below(t)]);
  const double v_eta = num_terms_ * eta_;
  const double prior = alpha_ / num_topics_;
  const auto K = static_cast<std::size_t>(num_topics_);
  for (const std::size_t t : order_) {
    decrement(t);
    const int* term_row = term_topic_.data() + static_cast<std::size_t>(term_[t]) * K;
    const int* doc_row = doc_topic_.data() + static_cast<std::size_t>(doc_of_[t]) * K;
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      total += (eta_ + term_row[k]) / (v_eta + topic_total_[k]) * (doc_row[k] + prior);
      cumulative_[k] = total;
    }
    const double u = rng.uniform() * total;
    auto k = static_cast<int>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
    increment(t, std::min(k, num_topics_ - 1));
  }
}

std::vector<double> lda_token_conditional(const LdaState& state, std::size_t j, std::size_t i) {
  if (state.topic(j, i) != LdaState::kUnassigned) {
    throw std::logic_error("lda_token_conditional: token must be removed from the counts first");
  }
  const int v = state.term(j, i);
  const double v_eta = state.num_terms() * state.eta();
  const double prior = state.alpha() / state.num_topics();
  std::vector<double> weights(static_cast<std::size_t>(state.num_topics()));
  for (int k = 0; k < state.num_topics(); ++k) {
    weights[k] = (state.eta() + state.term_topic(v, k)) / (v_eta + state.topic_total(k)) *
                 (state.doc_topic(j, k) + prior);
  }
  return weights;
}

PosteriorDraw lda_posterior_draw(const LdaState& state, RngStream& rng) {
  PosteriorDraw draw;
  draw.num_topics = state.num_topics();
  draw.num_terms = state.num_terms();
  draw.num_docs = static_cast<int>(state.num_docs());
  const auto K = static_cast<std::size_t>(draw.num_topics);
  const auto V = static_cast<std::size_t>(draw.num_terms);
  draw.phi.resize(K * V);
  draw.theta.resize(state.num_docs() * K);
  std::vector<double> alpha(V);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t v = 0; v < V; ++v) {
      alpha[v] = state.eta() + state.term_topic(static_cast<int>(v), static_cast<int>(k));
    }
    sample_dirichlet(rng, alpha, std::span<double>(draw.phi.data() + k * V, V));
  }
  std::vector<double> doc_alpha(K);
  const double prior = state.alpha() / state.num_topics();
  for (std::size_t j = 0; j < state.num_docs(); ++j) {
    for (std::size_t k = 0; k < K; ++k) doc_alpha[k] = state.doc_topic(j, static_cast<int>(k)) + prior;
    sample_dirichlet(rng, doc_alpha, std::span<double>(draw.theta.data() + j * K, K));
  }
  return draw;
}

void LdaTrainConfig::validate() const {
  if (num_topics < 1) throw std::invalid_argument("lda_train: need at least one topic");
  if (!(alpha > 0.0) || !(eta > 0.0)) throw std::invalid_argument("lda_train: alpha and eta must be positive");
  if (iterations < 0 || collect < 0) throw std::invalid_argument("lda_train: counts must be nonnegative");
  if (thin < 1) throw std::invalid_argument("lda_train: thin must be at least 1");
}

LdaTrainResult lda_train(const Corpus& corpus, const LdaTrainConfig& config, RngStream& rng,
                         const DrawSink& sink) {
  config.validate();
  LdaTrainResult result{{}, LdaState(corpus, config.num_topics, config.alpha, config.eta, rng), 0};
  RngStream draw_rng = rng.split("posterior-draws");
  result.trace.rows.push_back({0, config.num_topics, 0.0, 0.0, 0.0});
  const int burn_in = std::max(0, config.iterations - config.collect);
  for (int iter = 1; iter <= config.iterations; ++iter) {
    result.state.sweep(rng);
    if (iter > burn_in && (iter - burn_in - 1) % config.thin == 0) {
      if (sink) sink(iter, lda_posterior_draw(result.state, draw_rng));
      ++result.draws_collected;
    }
    result.trace.rows.push_back({iter, config.num_topics, 0.0, 0.0, 0.0});
  }
  return result;
}

}  // namespace bnbp
