#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "bnbp/rng.hpp"
#include "bnbp/trace.hpp"

namespace bnbp {

// Parameters of the beta-negative binomial process: mass gamma0,
// concentration c and one negative binomial dispersion r_j per group.
struct BnbpParams {
  double gamma0 = 1.0;
  double c = 1.0;
  std::vector<double> r;

  double r_dot() const;
  std::size_t num_groups() const { return r.size(); }
  // Throws std::invalid_argument unless every entry is positive and finite.
  void validate() const;
};

// J x K matrix of nonnegative counts whose columns each sum to at least one.
// Row j holds the sizes of the clusters of group j.
class CountMatrix {
 public:
  CountMatrix() = default;
  CountMatrix(std::size_t rows, std::size_t cols, std::vector<int> data);
  static CountMatrix from_rows(const std::vector<std::vector<int>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int operator()(std::size_t j, std::size_t k) const { return data_[j * cols_ + k]; }
  long long column_total(std::size_t k) const;
  long long row_total(std::size_t j) const;
  std::vector<int> column(std::size_t k) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<int> data_;
};

// Cluster assignments of grouped data together with the derived count table.
//
// Labels 0..K-1 are compact: removing the last member of a cluster deletes
// it and moves the highest label into the hole. canonicalize() relabels in
// order of first appearance (group 0 first, then by position).
class GroupedPartition {
 public:
  static constexpr int kUnassigned = -1;

  // All tokens start unassigned.
  explicit GroupedPartition(std::vector<int> group_sizes);
  // Labels must form the set {0..K-1}; kUnassigned is allowed.
  static GroupedPartition from_assignments(const std::vector<std::vector<int>>& assignments);

  std::size_t num_groups() const { return assignments_.size(); }
  int group_size(std::size_t j) const { return static_cast<int>(assignments_[j].size()); }
  std::vector<int> group_sizes() const;
  int total_size() const;
  int num_clusters() const { return static_cast<int>(totals_.size()); }
  int count(std::size_t j, int k) const { return counts_[j][k]; }
  int column_total(int k) const { return totals_[k]; }
  int assignment(std::size_t j, std::size_t i) const { return assignments_[j][i]; }
  const std::vector<std::vector<int>>& assignments() const { return assignments_; }
  bool fully_assigned() const { return unassigned_ == 0; }

  // Removes token (j, i) from its cluster, deleting the cluster if emptied.
  void unassign(std::size_t j, std::size_t i);
  // k == num_clusters() opens a new cluster.
  void assign(std::size_t j, std::size_t i, int k);

  void canonicalize();
  CountMatrix count_matrix() const;

  // Recomputes every count from the assignments; throws std::logic_error on
  // any mismatch or empty cluster.
  void check_consistency() const;

 private:
  void remove_cluster(int k);

  std::vector<std::vector<int>> assignments_;
  std::vector<std::vector<int>> counts_;  // [group][cluster]
  std::vector<int> totals_;
  int unassigned_ = 0;
};

// Thrown by eppf_log when the exact normalizer would exceed the budget.
class EppfBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultEppfBudget = 12;

// Log of the exchangeable cluster probability function f(z, m | r, gamma0, c):
// the joint law of random group sizes and their partition.
double ecpf_log(const GroupedPartition& partition, const BnbpParams& params);
// Same quantity from cluster sizes alone (row sums give the group sizes).
double ecpf_log(const CountMatrix& counts, const BnbpParams& params);

// Log prior of a BNBP random count matrix with uniformly ordered columns.
double count_matrix_log_prob(const CountMatrix& counts, const BnbpParams& params);

// K ~ Pois(gamma0 [psi(c + r.) - psi(c)]) i.i.d. columns, each a
// digamma-distributed total split across groups by a Dirichlet-multinomial.
CountMatrix count_matrix_prior_sample(std::size_t num_groups, const BnbpParams& params, RngStream& rng);

// log f(m | r, gamma0, c), the marginal law of the group sizes, by exact
// dynamic programming over column compositions.
double group_sizes_log_marginal(std::span<const int> group_sizes, const BnbpParams& params,
                                int budget = kDefaultEppfBudget);

// Log of the group-size dependent EPPF f(z | m, r, gamma0, c).
double eppf_log(const GroupedPartition& partition, const BnbpParams& params,
                int budget = kDefaultEppfBudget);

// Unnormalized full conditional of z_{ji} given all other labels. Entry k < K
// is an existing cluster; the last entry opens a new one. Token (j, i) must
// have been unassigned first.
std::vector<double> prediction_weights(const GroupedPartition& partition, std::size_t j,
                                       std::size_t i, const BnbpParams& params);

struct PartitionRun {
  GroupedPartition partition;
  ChainTrace trace;
};

using PartitionObserver = std::function<void(int iter, const GroupedPartition&)>;

// Gibbs sampling from the EPPF with the prediction rule. Tokens are placed
// sequentially by the rule, then every iteration resamples each token once in
// a fresh random order. The observer, when set, sees the state after every
// sweep. The returned partition is canonicalized.
PartitionRun partition_gibbs_run(std::span<const int> group_sizes, const BnbpParams& params,
                                 int iters, RngStream& rng, const PartitionObserver& observer = {});

// Rows = groups, columns = clusters, no header.
void write_count_matrix_csv(std::ostream& out, const CountMatrix& counts);

}  // namespace bnbp
