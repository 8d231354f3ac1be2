#include <doctest.h>

#include <algorithm>
#include <stdexcept>
#include <cmath>
#include <numeric>
#include <sstream>

#include "../support/enumerate.hpp"
#include "bnbp/distributions.hpp"
#include "bnbp/partition.hpp"
#include "bnbp/special.hpp"

using namespace bnbp;
using bnbp::testing::for_each_partition;
using bnbp::testing::random_params;
using bnbp::testing::random_partition;

namespace {

const BnbpParams kUnit{1.0, 1.0, {1.0}};

}  // namespace

TEST_CASE("params validation") {
  CHECK_NOTHROW(kUnit.validate());
  CHECK_THROWS(BnbpParams{0.0, 1.0, {1.0}}.validate());
  CHECK_THROWS(BnbpParams{1.0, -1.0, {1.0}}.validate());
  CHECK_THROWS(BnbpParams{1.0, 1.0, {1.0, NAN}}.validate());
  CHECK(BnbpParams{1.0, 1.0, {0.5, 2.0, 3.0}}.r_dot() == 5.5);
}

TEST_CASE("grouped partition bookkeeping") {
  GroupedPartition p({3, 2});
  CHECK(p.num_clusters() == 0);
  CHECK_FALSE(p.fully_assigned());
  p.assign(0, 0, 0);
  p.assign(0, 1, 1);
  p.assign(0, 2, 0);
  p.assign(1, 0, 2);
  p.assign(1, 1, 1);
  CHECK(p.fully_assigned());
  CHECK(p.num_clusters() == 3);
  CHECK(p.count(0, 0) == 2);
  CHECK(p.column_total(1) == 2);
  p.check_consistency();

  // Emptying cluster 0 moves the highest label into its place.
  p.unassign(0, 0);
  p.unassign(0, 2);
  CHECK(p.num_clusters() == 2);
  CHECK(p.assignment(1, 0) == 0);
  CHECK(p.column_total(0) == 1);
  p.check_consistency();
  p.assign(0, 0, 2);
  p.assign(0, 2, 2);
  p.canonicalize();
  CHECK(p.assignments() == std::vector<std::vector<int>>{{0, 1, 0}, {2, 1}});
  p.check_consistency();

  CHECK_THROWS(GroupedPartition::from_assignments({{0, 2}}));
  CHECK_THROWS(CountMatrix::from_rows({{1, 0}, {2, 0}}));
}

TEST_CASE("ECPF hand values") {
  const auto one = GroupedPartition::from_assignments({{0}});
  CHECK(ecpf_log(one, kUnit) == doctest::Approx(-1.0 + std::log(0.5)).epsilon(1e-14));
  CHECK(ecpf_log(one, kUnit) == doctest::Approx(-1.6931).epsilon(1e-4));
  const auto together = GroupedPartition::from_assignments({{0, 0}});
  const auto apart = GroupedPartition::from_assignments({{0, 1}});
  CHECK(ecpf_log(together, kUnit) == doctest::Approx(std::log(std::exp(-1.0) / 6.0)).epsilon(1e-14));
  CHECK(ecpf_log(apart, kUnit) == doctest::Approx(std::log(std::exp(-1.0) / 8.0)).epsilon(1e-14));
  CHECK(count_matrix_log_prob(CountMatrix::from_rows({{2}}), kUnit) ==
        doctest::Approx(std::log(std::exp(-1.0) / 6.0)).epsilon(1e-14));
}

// Reference values: tests/oracles/partition_values.py (brute-force set
// partition enumeration in mpmath).
TEST_CASE("group-size marginal against enumeration oracle") {
  struct Case {
    std::vector<int> m;
    BnbpParams params;
    double want;
  };
  const std::vector<Case> cases = {
      {{2}, kUnit, -2.2321436812926323145},
      {{2, 1}, {1.7, 0.6, {0.8, 2.3}}, -5.9174293423109936518},
      {{3, 2}, {0.4, 3.1, {1.5, 0.2}}, -8.2600689363352745786},
      {{1, 2, 2}, {5.0, 0.25, {0.7, 1.1, 4.0}}, -27.941951792222482785},
      {{6}, {2.2, 1.3, {0.9}}, -3.2121420215023612447},
  };
  for (const auto& c : cases) {
    CHECK(group_sizes_log_marginal(c.m, c.params) == doctest::Approx(c.want).epsilon(1e-12));
  }
  const auto z = GroupedPartition::from_assignments({{0, 1, 0}, {1, 2}});
  CHECK(ecpf_log(z, cases[2].params) == doctest::Approx(-15.146725829377988609).epsilon(1e-12));
}

TEST_CASE("EPPF hand values") {
  CHECK(std::abs(eppf_log(GroupedPartition::from_assignments({{0}}), kUnit)) < 1e-14);
  const double together = std::exp(eppf_log(GroupedPartition::from_assignments({{0, 0}}), kUnit));
  const double apart = std::exp(eppf_log(GroupedPartition::from_assignments({{0, 1}}), kUnit));
  CHECK(together == doctest::Approx(4.0 / 7.0).epsilon(1e-14));
  CHECK(apart == doctest::Approx(3.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("EPPF normalizes over every partition (property)") {
  RngStream rng(21);
  const std::vector<std::vector<int>> shapes = {{1}, {4}, {2, 1}, {3, 2}, {1, 1, 1}, {0, 3}, {2, 2, 2}, {5, 3}};
  for (const auto& m : shapes) {
    for (int rep = 0; rep < 10; ++rep) {
      const BnbpParams params = random_params(m.size(), rng);
      double total = 0.0;
      for_each_partition(m, [&](const GroupedPartition& p) { total += std::exp(eppf_log(p, params)); });
      INFO("shape size " << m.size() << " gamma0 " << params.gamma0 << " c " << params.c);
      CHECK(std::abs(total - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("EPPF refuses sizes beyond the budget") {
  GroupedPartition p = GroupedPartition::from_assignments({std::vector<int>(13, 0)});
  CHECK_THROWS_AS(eppf_log(p, kUnit), EppfBudgetExceeded);
  CHECK_NOTHROW(eppf_log(p, kUnit, 13));
}

TEST_CASE("ECPF exchangeability (property)") {
  RngStream rng(22);
  for (int rep = 0; rep < 50; ++rep) {
    const std::vector<int> sizes = {1 + static_cast<int>(rng.below(6)), static_cast<int>(rng.below(6)),
                                    1 + static_cast<int>(rng.below(4))};
    const BnbpParams params = random_params(3, rng);
    GroupedPartition p = random_partition(sizes, rng);
    const double base = ecpf_log(p, params);

    // Relabel clusters and shuffle tokens within groups.
    std::vector<int> perm(static_cast<std::size_t>(p.num_clusters()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    auto z = p.assignments();
    for (auto& g : z) {
      for (int& k : g) k = perm[k];
      std::shuffle(g.begin(), g.end(), rng.engine());
    }
    CHECK(ecpf_log(GroupedPartition::from_assignments(z), params) == doctest::Approx(base).epsilon(1e-12));
    CHECK(ecpf_log(p.count_matrix(), params) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("count matrix prior relates to the ECPF (property)") {
  RngStream rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<int> sizes = {1 + static_cast<int>(rng.below(5)), 1 + static_cast<int>(rng.below(5))};
    const BnbpParams params = random_params(2, rng);
    const GroupedPartition p = random_partition(sizes, rng);
    const CountMatrix n = p.count_matrix();
    double log_coeff = -ln_factorial(n.cols());
    for (std::size_t j = 0; j < n.rows(); ++j) {
      log_coeff += ln_factorial(n.row_total(j));
      for (std::size_t k = 0; k < n.cols(); ++k) log_coeff -= ln_factorial(n(j, k));
    }
    CHECK(count_matrix_log_prob(n, params) - ecpf_log(p, params) == doctest::Approx(log_coeff).epsilon(1e-12));

    // Column permutation invariance.
    std::vector<std::vector<int>> rows(n.rows(), std::vector<int>(n.cols()));
    std::vector<std::size_t> perm(n.cols());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    for (std::size_t j = 0; j < n.rows(); ++j) {
      for (std::size_t k = 0; k < n.cols(); ++k) rows[j][k] = n(j, perm[k]);
    }
    CHECK(count_matrix_log_prob(CountMatrix::from_rows(rows), params) ==
          doctest::Approx(count_matrix_log_prob(n, params)).epsilon(1e-12));
  }
}

TEST_CASE("count matrix prior sampler") {
  RngStream rng(24);
  const BnbpParams tiny{1e-14, 1.0, {1.0, 2.0}};
  for (int i = 0; i < 100; ++i) CHECK(count_matrix_prior_sample(2, tiny, rng).cols() == 0);

  // Frequency of the 1x1 matrix [1] against its prior probability.
  const BnbpParams small{0.3, 1.0, {1.0}};
  const double want = std::exp(count_matrix_log_prob(CountMatrix::from_rows({{1}}), small));
  int hits = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const CountMatrix n = count_matrix_prior_sample(1, small, rng);
    for (std::size_t k = 0; k < n.cols(); ++k) CHECK(n.column_total(k) >= 1);
    if (n.cols() == 1 && n(0, 0) == 1) ++hits;
  }
  const double se = std::sqrt(want * (1 - want) / draws);
  CHECK(std::abs(hits / static_cast<double>(draws) - want) < 3 * se);

  // E[K_J] at the Figure 1 setting is 12 by construction of gamma0.
  BnbpParams fig{0.0, 2.0, std::vector<double>(10, 1.0)};
  fig.gamma0 = 12.0 / (digamma(2.0 + 10.0) - digamma(2.0));
  double sum = 0.0, sq = 0.0;
  const int n_draws = 20000;
  for (int i = 0; i < n_draws; ++i) {
    const auto k = static_cast<double>(count_matrix_prior_sample(10, fig, rng).cols());
    sum += k;
    sq += k * k;
  }
  const double mean = sum / n_draws;
  const double sd = std::sqrt(sq / n_draws - mean * mean);
  CHECK(std::abs(mean - 12.0) < 3 * sd / std::sqrt(n_draws));
}

TEST_CASE("prediction rule hand values") {
  GroupedPartition empty({1});
  const auto w0 = prediction_weights(empty, 0, 0, kUnit);
  REQUIRE(w0.size() == 1);
  CHECK(w0[0] > 0.0);

  GroupedPartition p({2});
  p.assign(0, 0, 0);
  const auto w = prediction_weights(p, 0, 1, kUnit);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(1.0 / 3.0 * 2.0).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w[0] / (w[0] + w[1]) == doctest::Approx(4.0 / 7.0).epsilon(1e-14));
  CHECK_THROWS_AS(prediction_weights(p, 0, 0, kUnit), std::logic_error);
}

TEST_CASE("prediction weights equal ECPF ratios (property)") {
  RngStream rng(25);
  for (int rep = 0; rep < 200; ++rep) {
    const std::vector<int> sizes = {1 + static_cast<int>(rng.below(8)), static_cast<int>(rng.below(8))};
    const BnbpParams params = random_params(2, rng);
    GroupedPartition p = random_partition(sizes, rng);
    const std::size_t j = 0;
    const std::size_t i = rng.below(static_cast<std::uint64_t>(sizes[0]));
    p.unassign(j, i);
    const auto w = prediction_weights(p, j, i, params);
    std::vector<double> logf;
    for (int k = 0; k <= p.num_clusters(); ++k) {
      GroupedPartition q = p;
      q.assign(j, i, k);
      logf.push_back(ecpf_log(q, params));
    }
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
      const double want = std::exp(logf[k] - logf.back());
      CHECK(std::abs(w[k] / w.back() - want) <= 1e-12 * want);
    }
  }
}

TEST_CASE("partition Gibbs run") {
  RngStream rng(26);
  const std::vector<int> zeros = {0, 0, 0};
  const BnbpParams params{2.0, 1.0, {1.0, 1.0, 1.0}};
  const auto empty = partition_gibbs_run(zeros, params, 5, rng);
  CHECK(empty.partition.num_clusters() == 0);
  CHECK(empty.trace.rows.size() == 6);

  const std::vector<int> sizes = {6, 4, 5};
  int sweeps = 0;
  const auto run = partition_gibbs_run(sizes, params, 30, rng, [&](int, const GroupedPartition& p) {
    p.check_consistency();
    ++sweeps;
  });
  CHECK(sweeps == 30);
  CHECK(run.trace.rows.size() == 31);
  CHECK(run.trace.rows.back().num_topics == run.partition.num_clusters());
  const CountMatrix n = run.partition.count_matrix();
  for (std::size_t j = 0; j < 3; ++j) CHECK(n.row_total(j) == sizes[j]);

  RngStream a(9), b(9);
  CHECK(partition_gibbs_run(sizes, params, 20, a).partition.assignments() ==
        partition_gibbs_run(sizes, params, 20, b).partition.assignments());

  std::ostringstream csv;
  write_count_matrix_csv(csv, CountMatrix::from_rows({{1, 0}, {2, 3}}));
  CHECK(csv.str() == "1,0\n2,3\n");
}
