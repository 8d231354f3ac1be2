#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bnbp/corpus.hpp"
#include "bnbp/lda.hpp"
#include "bnbp/perplexity.hpp"

using namespace bnbp;

namespace {

Corpus toy() {
  Corpus c;
  c.num_terms = 4;
  c.docs = {{0, 1, 1, 2}, {3, 3, 0}, {2, 2, 1, 0, 3}};
  return c;
}

}  // namespace

TEST_CASE("LDA conditional hand case") {
  // Term 0 of document 0 removed: n_{v.1} = 3, n_{.1} = 4, n_{j1} = 2.
  Corpus c;
  c.num_terms = 2;
  c.docs = {{0, 0, 0}, {0, 1}, {1}};
  LdaState s(c, 2, 1.0, 0.5, {{0, 0, 0}, {0, 0}, {1}});
  s.remove_token(0, 2);
  const auto w = lda_token_conditional(s, 0, 2);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(3.5 / 5.0 * 2.5).epsilon(1e-14));
  CHECK(w[0] == doctest::Approx(1.75).epsilon(1e-14));
}

TEST_CASE("LDA conditional edge cases") {
  Corpus c;
  c.num_terms = 3;
  c.docs = {{2}};
  LdaState s(c, 4, 2.0, 0.1, {{1}});
  s.remove_token(0, 0);
  const auto w = lda_token_conditional(s, 0, 0);
  REQUIRE(w.size() == 4);
  for (double x : w) CHECK(x == doctest::Approx((1.0 / 3.0) * 0.5).epsilon(1e-14));

  LdaState one(c, 1, 2.0, 0.1, {{0}});
  one.remove_token(0, 0);
  CHECK(lda_token_conditional(one, 0, 0).size() == 1);
}

TEST_CASE("LDA sweeps keep counts consistent and K fixed (property)") {
  RngStream rng(51);
  LdaState s(toy(), 3, 1.0, 0.2, rng);
  for (int it = 0; it < 1000; ++it) {
    s.sweep(rng);
    CHECK(s.num_topics() == 3);
    CHECK_NOTHROW(s.check_invariants());
  }
  s.remove_token(1, 1);
  for (double w : lda_token_conditional(s, 1, 1)) CHECK(w > 0.0);
}

TEST_CASE("LDA with one topic reduces to a smoothed unigram model") {
  RngStream rng(52);
  const Corpus c = toy();
  LdaState s(c, 1, 1.0, 0.5, rng);
  TestCounts test;
  test.num_terms = 4;
  test.docs = {{{0, 2}, {3, 1}}, {{1, 1}}, {{2, 3}}};

  // One draw: theta_j is 1, so the predictive is phi itself.
  const PosteriorDraw d = lda_posterior_draw(s, rng);
  double acc = 0.0;
  for (const auto& doc : test.docs) {
    for (const auto& e : doc) acc += e.count * std::log(d.phi_at(0, e.term));
  }
  CHECK(perplexity(test, std::span<const PosteriorDraw>(&d, 1)) ==
        doctest::Approx(std::exp(-acc / test.total())).epsilon(1e-12));

  // Many draws approach the posterior mean unigram (eta + n_v) / (V eta + N).
  PerplexityAccumulator many(test);
  for (int i = 0; i < 20000; ++i) many.add(lda_posterior_draw(s, rng));
  const std::vector<double> n = {3, 3, 3, 3};
  double want = 0.0;
  for (const auto& doc : test.docs) {
    for (const auto& e : doc) want += e.count * std::log((0.5 + n[e.term]) / (4 * 0.5 + 12.0));
  }
  CHECK(many.value() == doctest::Approx(std::exp(-want / test.total())).epsilon(2e-3));
}

TEST_CASE("LDA training is deterministic") {
  LdaTrainConfig cfg;
  cfg.num_topics = 3;
  cfg.iterations = 30;
  cfg.collect = 10;
  RngStream a(4), b(4);
  int draws = 0;
  const auto ra = lda_train(toy(), cfg, a, [&](int, const PosteriorDraw& d) {
    ++draws;
    CHECK(d.num_topics == 3);
  });
  const auto rb = lda_train(toy(), cfg, b);
  CHECK(draws == 10);
  CHECK(ra.draws_collected == 10);
  CHECK(ra.state.topic_labels() == rb.state.topic_labels());
  CHECK(ra.trace.rows.size() == 31);
  CHECK(ra.trace.rows.back().num_topics == 3);
}
