#include "bnbp/topic_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bnbp/distributions.hpp"
#include "bnbp/special.hpp"

namespace bnbp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kInitialCapacity = 16;

// Keeps Gamma draws with tiny shapes strictly positive.
double positive(double x) { return std::max(x, std::numeric_limits<double>::min()); }

}  // namespace

// ---------------------------------------------------------------------------
// Construction

void TopicModelState::init_tokens(const Corpus& corpus) {
  corpus.validate();
  if (!(eta_ > 0.0) || !std::isfinite(eta_)) throw std::invalid_argument("topic model: eta must be positive");
  if (corpus.num_terms < 1) throw std::invalid_argument("topic model: empty vocabulary");
  if (params_.num_groups() != corpus.num_docs()) {
    throw std::invalid_argument("topic model: need one dispersion r_j per document");
  }
  params_.validate();
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
  grow(kInitialCapacity);
}

TopicModelState::TopicModelState(const Corpus& corpus, double eta, BnbpParams params)
    : eta_(eta), params_(std::move(params)), r_dot_(params_.r_dot()) {
  init_tokens(corpus);
  if (!term_.empty()) {
    const int k = open_slot();
    for (std::size_t t = 0; t < term_.size(); ++t) increment(t, k);
  }
}

TopicModelState::TopicModelState(const Corpus& corpus, double eta, BnbpParams params,
                                 const std::vector<std::vector<int>>& topics)
    : eta_(eta), params_(std::move(params)), r_dot_(params_.r_dot()) {
  init_tokens(corpus);
  if (topics.size() != corpus.num_docs()) throw std::invalid_argument("topic model: label shape mismatch");
  int max_label = -1;
  for (std::size_t j = 0; j < topics.size(); ++j) {
    if (static_cast<int>(topics[j].size()) != doc_length(j)) {
      throw std::invalid_argument("topic model: label shape mismatch");
    }
    for (int k : topics[j]) {
      if (k < 0) throw std::invalid_argument("topic model: negative topic label");
      max_label = std::max(max_label, k);
    }
  }
  for (int k = 0; k <= max_label; ++k) open_slot();
  for (std::size_t j = 0; j < topics.size(); ++j) {
    for (std::size_t i = 0; i < topics[j].size(); ++i) increment(doc_offset_[j] + i, topics[j][i]);
  }
  for (int k = 0; k <= max_label; ++k) {
    if (topic_total_[k] == 0) throw std::invalid_argument("topic model: labels must be contiguous from 0");
  }
}

// ---------------------------------------------------------------------------
// Table maintenance

void TopicModelState::grow(int new_capacity) {
  const std::size_t docs = num_docs();
  const auto terms = static_cast<std::size_t>(num_terms_);
  const auto old_cap = static_cast<std::size_t>(capacity_);
  const auto cap = static_cast<std::size_t>(new_capacity);
  std::vector<int> doc_topic(docs * cap, 0);
  std::vector<int> term_topic(terms * cap, 0);
  for (std::size_t j = 0; j < docs; ++j) {
    std::copy_n(doc_topic_.begin() + j * old_cap, slots_, doc_topic.begin() + j * cap);
  }
  for (std::size_t v = 0; v < terms; ++v) {
    std::copy_n(term_topic_.begin() + v * old_cap, slots_, term_topic.begin() + v * cap);
  }
  doc_topic_ = std::move(doc_topic);
  term_topic_ = std::move(term_topic);
  topic_total_.resize(cap, 0);
  topic_factor_.resize(cap, 0.0);
  p_.resize(cap, kNaN);
  log1m_p_.resize(cap, kNaN);
  cumulative_.resize(cap + 1, 0.0);
  capacity_ = new_capacity;
}

int TopicModelState::open_slot() {
  int k;
  if (!free_slots_.empty()) {
    k = free_slots_.back();
    free_slots_.pop_back();
  } else {
    if (slots_ == capacity_) grow(2 * capacity_);
    k = slots_++;
  }
  p_[k] = kNaN;
  log1m_p_[k] = kNaN;
  return k;
}

void TopicModelState::refresh_topic_factor(int k) {
  const double n = topic_total_[k];
  const double v_eta = num_terms_ * eta_;
  topic_factor_[k] = n / ((v_eta + n) * (params_.c + n + r_dot_));
}

void TopicModelState::refresh_topic_factors() {
  for (int k = 0; k < slots_; ++k) refresh_topic_factor(k);
}

void TopicModelState::decrement(std::size_t t) {
  const int k = topic_[t];
  const auto cap = static_cast<std::size_t>(capacity_);
  --doc_topic_[static_cast<std::size_t>(doc_of_[t]) * cap + k];
  --term_topic_[static_cast<std::size_t>(term_[t]) * cap + k];
  if (--topic_total_[k] == 0) {
    --live_;
    free_slots_.push_back(k);
  }
  refresh_topic_factor(k);
  topic_[t] = kUnassigned;
}

void TopicModelState::increment(std::size_t t, int k) {
  const auto cap = static_cast<std::size_t>(capacity_);
  ++doc_topic_[static_cast<std::size_t>(doc_of_[t]) * cap + k];
  ++term_topic_[static_cast<std::size_t>(term_[t]) * cap + k];
  if (topic_total_[k]++ == 0) ++live_;
  refresh_topic_factor(k);
  topic_[t] = k;
}

void TopicModelState::remove_token(std::size_t j, std::size_t i) {
  const std::size_t t = doc_offset_.at(j) + i;
  if (i >= static_cast<std::size_t>(doc_length(j))) throw std::out_of_range("remove_token: bad token");
  if (topic_[t] == kUnassigned) throw std::logic_error("remove_token: token already removed");
  decrement(t);
}

void TopicModelState::add_token(std::size_t j, std::size_t i, int k) {
  const std::size_t t = doc_offset_.at(j) + i;
  if (i >= static_cast<std::size_t>(doc_length(j))) throw std::out_of_range("add_token: bad token");
  if (topic_[t] != kUnassigned) throw std::logic_error("add_token: token is still assigned");
  if (k < 0 || k > slots_) throw std::out_of_range("add_token: bad topic slot");
  if (k == slots_) {
    k = open_slot();
  } else if (topic_total_[k] == 0) {
    // Reusing a freed slot explicitly.
    std::erase(free_slots_, k);
    p_[k] = kNaN;
    log1m_p_[k] = kNaN;
  }
  increment(t, k);
}

void TopicModelState::compact() {
  if (live_ == slots_) {
    free_slots_.clear();
    return;
  }
  std::vector<int> relabel(static_cast<std::size_t>(slots_), kUnassigned);
  int next = 0;
  for (int k = 0; k < slots_; ++k) {
    if (topic_total_[k] > 0) relabel[k] = next++;
  }
  const auto cap = static_cast<std::size_t>(capacity_);
  auto move_columns = [&](std::vector<int>& table, std::size_t rows) {
    for (std::size_t row = 0; row < rows; ++row) {
      int* base = table.data() + row * cap;
      for (int k = 0; k < slots_; ++k) {
        if (relabel[k] != kUnassigned) base[relabel[k]] = base[k];
      }
      std::fill(base + next, base + slots_, 0);
    }
  };
  move_columns(doc_topic_, num_docs());
  move_columns(term_topic_, static_cast<std::size_t>(num_terms_));
  for (int k = 0; k < slots_; ++k) {
    if (relabel[k] == kUnassigned) continue;
    topic_total_[relabel[k]] = topic_total_[k];
    topic_factor_[relabel[k]] = topic_factor_[k];
    p_[relabel[k]] = p_[k];
    log1m_p_[relabel[k]] = log1m_p_[k];
  }
  for (int k = next; k < slots_; ++k) {
    topic_total_[k] = 0;
    topic_factor_[k] = 0.0;
    p_[k] = kNaN;
    log1m_p_[k] = kNaN;
  }
  for (int& z : topic_) {
    if (z != kUnassigned) z = relabel[z];
  }
  slots_ = next;
  free_slots_.clear();
}

CountMatrix TopicModelState::doc_topic_matrix() const {
  std::vector<int> live;
  for (int k = 0; k < slots_; ++k) {
    if (topic_total_[k] > 0) live.push_back(k);
  }
  std::vector<int> data;
  data.reserve(num_docs() * live.size());
  for (std::size_t j = 0; j < num_docs(); ++j) {
    for (int k : live) data.push_back(doc_topic(j, k));
  }
  return CountMatrix(num_docs(), live.size(), std::move(data));
}

std::vector<std::vector<int>> TopicModelState::topic_labels() const {
  std::vector<std::vector<int>> labels(num_docs());
  for (std::size_t j = 0; j < num_docs(); ++j) {
    labels[j].assign(topic_.begin() + static_cast<std::ptrdiff_t>(doc_offset_[j]),
                     topic_.begin() + static_cast<std::ptrdiff_t>(doc_offset_[j + 1]));
  }
  return labels;
}

void TopicModelState::check_invariants() const {
  const auto cap = static_cast<std::size_t>(capacity_);
  std::vector<int> doc_topic(num_docs() * cap, 0);
  std::vector<int> term_topic(static_cast<std::size_t>(num_terms_) * cap, 0);
  std::vector<int> totals(cap, 0);
  for (std::size_t t = 0; t < topic_.size(); ++t) {
    const int k = topic_[t];
    if (k == kUnassigned) continue;
    if (k < 0 || k >= slots_) throw std::logic_error("topic model: label outside the slot range");
    ++doc_topic[static_cast<std::size_t>(doc_of_[t]) * cap + k];
    ++term_topic[static_cast<std::size_t>(term_[t]) * cap + k];
    ++totals[k];
  }
  if (doc_topic != doc_topic_) throw std::logic_error("topic model: doc-topic table drift");
  if (term_topic != term_topic_) throw std::logic_error("topic model: term-topic table drift");
  if (totals != topic_total_) throw std::logic_error("topic model: topic total drift");
  int live = 0;
  for (int k = 0; k < slots_; ++k) live += totals[k] > 0;
  if (live != live_) throw std::logic_error("topic model: K_J drift");
  if (static_cast<int>(free_slots_.size()) != slots_ - live_) {
    throw std::logic_error("topic model: free-slot list drift");
  }
}

void TopicModelState::set_gamma0(double gamma0) {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw std::invalid_argument("gamma0 must be positive");
  params_.gamma0 = gamma0;
}

void TopicModelState::set_c(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("c must be positive");
  params_.c = c;
  refresh_topic_factors();
}

void TopicModelState::set_r(std::vector<double> r) {
  BnbpParams next = params_;
  next.r = std::move(r);
  if (next.num_groups() != num_docs()) throw std::invalid_argument("need one r_j per document");
  next.validate();
  params_ = std::move(next);
  r_dot_ = params_.r_dot();
  refresh_topic_factors();
}

void TopicModelState::set_topic_weight(int k, double p, double log_one_minus_p) {
  if (k < 0 || k >= slots_) throw std::out_of_range("set_topic_weight: bad slot");
  p_[k] = p;
  log1m_p_[k] = log_one_minus_p;
}

// ---------------------------------------------------------------------------
// Collapsed Gibbs sweep

void TopicModelState::sweep(RngStream& rng) {
  const std::size_t n = term_.size();
  order_.resize(n);
  for (std::size_t t = 0; t < n; ++t) order_[t] = t;
  for (std::size_t t = n; t > 1; --t) std::swap(order_[t - 1], order_[rng.below(t)]);

  const double new_topic_base =
      params_.gamma0 / (params_.c + r_dot_) / static_cast<double>(num_terms_);
  const double eta = eta_;

  constexpr std::size_t kLookahead = 4;
  auto prefetch_rows = [&](std::size_t t) {
    const auto cap = static_cast<std::size_t>(capacity_);
    const char* term_row = reinterpret_cast<const char*>(term_topic_.data() + static_cast<std::size_t>(term_[t]) * cap);
    const char* doc_row = reinterpret_cast<const char*>(doc_topic_.data() + static_cast<std::size_t>(doc_of_[t]) * cap);
    const std::size_t bytes = static_cast<std::size_t>(slots_) * sizeof(int);
    for (std::size_t b = 0; b < bytes; b += 64) {
      __builtin_prefetch(term_row + b);
      __builtin_prefetch(doc_row + b);
    }
  };

  for (std::size_t idx = 0; idx < n; ++idx) {
    if (idx + kLookahead < n) prefetch_rows(order_[idx + kLookahead]);
    const std::size_t t = order_[idx];
    decrement(t);
    const auto j = static_cast<std::size_t>(doc_of_[t]);
    const auto v = static_cast<std::size_t>(term_[t]);
    const double r_j = params_.r[j];
    // Opening a topic can grow the tables, so the width is read per token.
    const auto cap = static_cast<std::size_t>(capacity_);
    const int* __restrict term_row = term_topic_.data() + v * cap;
    const int* __restrict doc_row = doc_topic_.data() + j * cap;
    const double* __restrict factor = topic_factor_.data();
    double* __restrict w = cumulative_.data();
    const int slots = slots_;

    // Free slots have a zero factor and therefore zero weight. Four partial
    // sums keep the first loop vectorizable.
    double part[4] = {0.0, 0.0, 0.0, 0.0};
    int k = 0;
    for (; k + 4 <= slots; k += 4) {
      for (int l = 0; l < 4; ++l) {
        w[k + l] = (eta + term_row[k + l]) * factor[k + l] * (doc_row[k + l] + r_j);
        part[l] += w[k + l];
      }
    }
    for (; k < slots; ++k) {
      w[k] = (eta + term_row[k]) * factor[k] * (doc_row[k] + r_j);
      part[0] += w[k];
    }
    const double total = (part[0] + part[1]) + (part[2] + part[3]);
    double u = rng.uniform() * (total + new_topic_base * r_j);
    if (u < total) {
      k = 0;
      while (k + 1 < slots && (u -= w[k]) >= 0.0) ++k;
      // Rounding can leave u past a zero-weight free slot; step back to a live one.
      while (topic_factor_[k] == 0.0 && k > 0) --k;
    } else {
      k = open_slot();
    }
    increment(t, k);
  }
  compact();
}

// ---------------------------------------------------------------------------
// Operations

std::vector<double> token_conditional(const TopicModelState& state, std::size_t j, std::size_t i) {
  if (state.topic(j, i) != TopicModelState::kUnassigned) {
    throw std::logic_error("token_conditional: token must be removed from the counts first");
  }
  const BnbpParams& params = state.params();
  const double r_dot = params.r_dot();
  const double r_j = params.r[j];
  const double V = state.num_terms();
  const int v = state.term(j, i);
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(state.num_topics()) + 1);
  for (int k = 0; k < state.num_slots(); ++k) {
    if (!state.slot_live(k)) continue;
    const double n_k = state.topic_total(k);
    const double word = (state.eta() + state.term_topic(v, k)) / (V * state.eta() + n_k);
    weights.push_back(word * (n_k / (params.c + n_k + r_dot)) * (state.doc_topic(j, k) + r_j));
  }
  weights.push_back((1.0 / V) * (params.gamma0 / (params.c + r_dot)) * r_j);
  return weights;
}

void gibbs_sweep(TopicModelState& state, RngStream& rng) { state.sweep(rng); }

void draw_topic_weights(TopicModelState& state, RngStream& rng) {
  const double b = state.params().c + state.params().r_dot();
  for (int k = 0; k < state.num_slots(); ++k) {
    if (!state.slot_live(k)) continue;
    const BetaDraw d = sample_beta_draw(rng, state.topic_total(k), b);
    state.set_topic_weight(k, d.p, d.log_one_minus_p);
  }
}

void update_hyperparameters(TopicModelState& state, const Hyperpriors& hyper, RngStream& rng) {
  state.compact();
  const std::size_t J = state.num_docs();
  const int K = state.num_topics();
  const BnbpParams& params = state.params();
  const double c = params.c;
  const double r_dot = params.r_dot();

  // gamma0 ~ Gamma(e0 + K_J, 1 / (f0 + psi(c + r.) - psi(c)))
  const double log_mass_rate = hyper.f0 + digamma(c + r_dot) - digamma(c);
  state.set_gamma0(positive(sample_gamma(rng, hyper.e0 + K, 1.0 / log_mass_rate)));

  // p_k ~ Beta(n_k, c + r.), Q(rest) ~ logBeta(gamma0, c + r.)
  draw_topic_weights(state, rng);
  state.set_q_rest(logbeta_sample({state.params().gamma0, c + r_dot}, rng));
  double sum_log1m_p = 0.0;
  for (int k = 0; k < K; ++k) sum_log1m_p += state.log_one_minus_p(k);

  // l_jk = CRT(n_jk, r_j); r_j ~ Gamma(a0 + sum_k l_jk, 1 / (b0 + Q(rest) - sum_k ln(1 - p_k)))
  state.table_width_ = static_cast<std::size_t>(K);
  state.table_count_.assign(J * state.table_width_, 0);
  const double rate = hyper.b0 + state.q_rest() - sum_log1m_p;
  std::vector<double> r(J);
  for (std::size_t j = 0; j < J; ++j) {
    std::int64_t tables = 0;
    for (int k = 0; k < K; ++k) {
      const auto l = crt_sum_sample(state.doc_topic(j, k), params.r[j], rng);
      state.table_count_[j * state.table_width_ + k] = static_cast<int>(l);
      tables += l;
    }
    r[j] = positive(sample_gamma(rng, hyper.a0 + static_cast<double>(tables), 1.0 / rate));
  }
  state.set_r(std::move(r));
}

std::vector<double> concentration_grid() {
  std::vector<double> grid;
  grid.reserve(99);
  for (int i = 1; i <= 99; ++i) {
    const double u = i / 100.0;
    grid.push_back((1.0 - u) / u);
  }
  return grid;
}

std::vector<double> concentration_log_posterior(const TopicModelState& state) {
  const BnbpParams& params = state.params();
  const double r_dot = params.r_dot();
  std::vector<double> totals;
  for (int k = 0; k < state.num_slots(); ++k) {
    if (state.slot_live(k)) totals.push_back(state.topic_total(k));
  }
  const double K = static_cast<double>(totals.size());
  // Only the c-dependent factors of the ECPF:
  //   exp(-gamma0 [psi(c + r.) - psi(c)]) prod_k Gamma(c + r.) / Gamma(c + n_k + r.)
  std::vector<double> logp;
  for (double c : concentration_grid()) {
    double acc = -params.gamma0 * (digamma(c + r_dot) - digamma(c)) + K * ln_gamma(c + r_dot);
    for (double n : totals) acc -= ln_gamma(c + n + r_dot);
    logp.push_back(acc);
  }
  const double norm = log_sum_exp(logp);
  for (double& x : logp) x -= norm;
  return logp;
}

void sample_concentration_c(TopicModelState& state, RngStream& rng) {
  const auto logp = concentration_log_posterior(state);
  const auto grid = concentration_grid();
  state.set_c(grid[sample_categorical_log(rng, logp)]);
}

PosteriorDraw posterior_point_draw(const TopicModelState& state, RngStream& rng) {
  if (!state.is_compact()) throw std::logic_error("posterior_point_draw: state must be compact");
  PosteriorDraw draw;
  draw.num_topics = state.num_topics();
  draw.num_terms = state.num_terms();
  draw.num_docs = static_cast<int>(state.num_docs());
  const auto K = static_cast<std::size_t>(draw.num_topics);
  const auto V = static_cast<std::size_t>(draw.num_terms);
  draw.phi.resize(K * V);
  draw.theta.resize(static_cast<std::size_t>(draw.num_docs) * K);
  for (std::size_t k = 0; k < K; ++k) {
    if (std::isnan(state.p(static_cast<int>(k)))) {
      throw std::logic_error("posterior_point_draw: topic weight p_k has not been drawn");
    }
  }
  // Dirichlet parameters for every topic, transposed from the term-major
  // count table in tiles.
  std::vector<double> alpha(K * V);
  constexpr std::size_t kTile = 64;
  for (std::size_t v0 = 0; v0 < V; v0 += kTile) {
    for (std::size_t k0 = 0; k0 < K; k0 += kTile) {
      for (std::size_t v = v0; v < std::min(v0 + kTile, V); ++v) {
        for (std::size_t k = k0; k < std::min(k0 + kTile, K); ++k) {
          alpha[k * V + v] = state.eta() + state.term_topic(static_cast<int>(v), static_cast<int>(k));
        }
      }
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    sample_dirichlet(rng, std::span<const double>(alpha.data() + k * V, V),
                     std::span<double>(draw.phi.data() + k * V, V));
  }
  GammaBatch gamma(rng);
  for (std::size_t j = 0; j < state.num_docs(); ++j) {
    const double r_j = state.params().r[j];
    for (std::size_t k = 0; k < K; ++k) {
      draw.theta[j * K + k] = gamma(state.doc_topic(j, static_cast<int>(k)) + r_j, state.p(static_cast<int>(k)));
    }
  }
  return draw;
}

void BnbpTrainConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("train: eta must be positive");
  if (iterations < 0) throw std::invalid_argument("train: iterations must be nonnegative");
  if (collect < 0) throw std::invalid_argument("train: collect must be nonnegative");
  if (thin < 1) throw std::invalid_argument("train: thin must be at least 1");
  if (!(init_gamma0 > 0.0 && init_c > 0.0 && init_r > 0.0)) {
    throw std::invalid_argument("train: initial parameters must be positive");
  }
  for (double x : {hyper.a0, hyper.b0, hyper.e0, hyper.f0}) {
    if (!(x > 0.0)) throw std::invalid_argument("train: hyperpriors must be positive");
  }
}

BnbpTrainResult train(const Corpus& corpus, const BnbpTrainConfig& config, RngStream& rng,
                      const DrawSink& sink) {
  config.validate();
  BnbpParams init{config.init_gamma0, config.init_c, std::vector<double>(corpus.num_docs(), config.init_r)};
  BnbpTrainResult result{{}, TopicModelState(corpus, config.eta, std::move(init)), 0};
  TopicModelState& state = result.state;
  auto record = [&](int iter) {
    const BnbpParams& p = state.params();
    result.trace.rows.push_back({iter, state.num_topics(), p.gamma0, p.c, p.r_dot()});
  };
  record(0);
  // Posterior draws use their own substream so the chain itself does not
  // depend on whether anyone consumes them.
  RngStream draw_rng = rng.split("posterior-draws");
  const int burn_in = std::max(0, config.iterations - config.collect);
  for (int iter = 1; iter <= config.iterations; ++iter) {
    gibbs_sweep(state, rng);
    update_hyperparameters(state, config.hyper, rng);
    if (iter > burn_in && (iter - burn_in - 1) % config.thin == 0) {
      if (sink) sink(iter, posterior_point_draw(state, draw_rng));
      ++result.draws_collected;
    }
    if (config.sample_c) sample_concentration_c(state, rng);
    record(iter);
  }
  return result;
}

}  // namespace bnbp
