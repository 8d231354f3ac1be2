#include "bnbp/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bnbp/distributions.hpp"
#include "bnbp/special.hpp"

namespace bnbp {

double BnbpParams::r_dot() const { return std::accumulate(r.begin(), r.end(), 0.0); }

void BnbpParams::validate() const {
  auto ok = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (!ok(gamma0)) throw std::invalid_argument("BnbpParams: gamma0 must be positive");
  if (!ok(c)) throw std::invalid_argument("BnbpParams: c must be positive");
  if (r.empty()) throw std::invalid_argument("BnbpParams: need at least one group");
  for (double x : r) {
    if (!ok(x)) throw std::invalid_argument("BnbpParams: every r_j must be positive");
  }
}

// ---------------------------------------------------------------------------
// CountMatrix

CountMatrix::CountMatrix(std::size_t rows, std::size_t cols, std::vector<int> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw std::invalid_argument("CountMatrix: data size mismatch");
  for (int x : data_) {
    if (x < 0) throw std::invalid_argument("CountMatrix: negative count");
  }
  for (std::size_t k = 0; k < cols_; ++k) {
    if (column_total(k) < 1) throw std::invalid_argument("CountMatrix: empty column");
  }
}

CountMatrix CountMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<int> data;
  data.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    if (row.size() != cols) throw std::invalid_argument("CountMatrix: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return CountMatrix(rows.size(), cols, std::move(data));
}

long long CountMatrix::column_total(std::size_t k) const {
  long long s = 0;
  for (std::size_t j = 0; j < rows_; ++j) s += (*this)(j, k);
  return s;
}

long long CountMatrix::row_total(std::size_t j) const {
  long long s = 0;
  for (std::size_t k = 0; k < cols_; ++k) s += (*this)(j, k);
  return s;
}

std::vector<int> CountMatrix::column(std::size_t k) const {
  std::vector<int> col(rows_);
  for (std::size_t j = 0; j < rows_; ++j) col[j] = (*this)(j, k);
  return col;
}

// ---------------------------------------------------------------------------
// GroupedPartition

GroupedPartition::GroupedPartition(std::vector<int> group_sizes) {
  assignments_.reserve(group_sizes.size());
  for (int m : group_sizes) {
    if (m < 0) throw std::invalid_argument("GroupedPartition: negative group size");
    assignments_.emplace_back(static_cast<std::size_t>(m), kUnassigned);
    unassigned_ += m;
  }
  counts_.assign(group_sizes.size(), {});
}

GroupedPartition GroupedPartition::from_assignments(const std::vector<std::vector<int>>& assignments) {
  std::vector<int> sizes;
  for (const auto& g : assignments) sizes.push_back(static_cast<int>(g.size()));
  GroupedPartition p(sizes);
  int max_label = -1;
  for (const auto& g : assignments) {
    for (int k : g) {
      if (k < kUnassigned) throw std::invalid_argument("GroupedPartition: invalid label");
      max_label = std::max(max_label, k);
    }
  }
  const int k_count = max_label + 1;
  p.totals_.assign(static_cast<std::size_t>(k_count), 0);
  for (auto& row : p.counts_) row.assign(static_cast<std::size_t>(k_count), 0);
  for (std::size_t j = 0; j < assignments.size(); ++j) {
    for (std::size_t i = 0; i < assignments[j].size(); ++i) {
      const int k = assignments[j][i];
      p.assignments_[j][i] = k;
      if (k == kUnassigned) continue;
      ++p.counts_[j][k];
      ++p.totals_[k];
      --p.unassigned_;
    }
  }
  for (int t : p.totals_) {
    if (t == 0) throw std::invalid_argument("GroupedPartition: labels must be contiguous from 0");
  }
  return p;
}

std::vector<int> GroupedPartition::group_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(assignments_.size());
  for (const auto& g : assignments_) sizes.push_back(static_cast<int>(g.size()));
  return sizes;
}

int GroupedPartition::total_size() const {
  int s = 0;
  for (const auto& g : assignments_) s += static_cast<int>(g.size());
  return s;
}

void GroupedPartition::unassign(std::size_t j, std::size_t i) {
  const int k = assignments_.at(j).at(i);
  if (k == kUnassigned) throw std::logic_error("GroupedPartition: token already unassigned");
  assignments_[j][i] = kUnassigned;
  ++unassigned_;
  --counts_[j][k];
  if (--totals_[k] == 0) remove_cluster(k);
}

void GroupedPartition::assign(std::size_t j, std::size_t i, int k) {
  if (assignments_.at(j).at(i) != kUnassigned) {
    throw std::logic_error("GroupedPartition: token is already assigned");
  }
  if (k < 0 || k > num_clusters()) throw std::out_of_range("GroupedPartition: bad cluster label");
  if (k == num_clusters()) {
    totals_.push_back(0);
    for (auto& row : counts_) row.push_back(0);
  }
  assignments_[j][i] = k;
  --unassigned_;
  ++counts_[j][k];
  ++totals_[k];
}

void GroupedPartition::remove_cluster(int k) {
  const int last = num_clusters() - 1;
  if (k != last) {
    totals_[k] = totals_[last];
    for (auto& row : counts_) row[k] = row[last];
    for (auto& g : assignments_) {
      for (int& z : g) {
        if (z == last) z = k;
      }
    }
  }
  totals_.pop_back();
  for (auto& row : counts_) row.pop_back();
}

void GroupedPartition::canonicalize() {
  std::vector<int> relabel(totals_.size(), kUnassigned);
  int next = 0;
  for (const auto& g : assignments_) {
    for (int z : g) {
      if (z != kUnassigned && relabel[z] == kUnassigned) relabel[z] = next++;
    }
  }
  for (auto& g : assignments_) {
    for (int& z : g) {
      if (z != kUnassigned) z = relabel[z];
    }
  }
  std::vector<int> totals(totals_.size());
  for (std::size_t k = 0; k < totals_.size(); ++k) totals[relabel[k]] = totals_[k];
  totals_ = std::move(totals);
  for (auto& row : counts_) {
    std::vector<int> moved(row.size());
    for (std::size_t k = 0; k < row.size(); ++k) moved[relabel[k]] = row[k];
    row = std::move(moved);
  }
}

CountMatrix GroupedPartition::count_matrix() const { return CountMatrix::from_rows(counts_); }

void GroupedPartition::check_consistency() const {
  const std::size_t k_count = totals_.size();
  std::vector<std::vector<int>> counts(assignments_.size(), std::vector<int>(k_count, 0));
  int unassigned = 0;
  for (std::size_t j = 0; j < assignments_.size(); ++j) {
    for (int z : assignments_[j]) {
      if (z == kUnassigned) {
        ++unassigned;
        continue;
      }
      if (z < 0 || static_cast<std::size_t>(z) >= k_count) {
        throw std::logic_error("GroupedPartition: label out of range");
      }
      ++counts[j][z];
    }
  }
  if (unassigned != unassigned_) throw std::logic_error("GroupedPartition: unassigned count drift");
  if (counts != counts_) throw std::logic_error("GroupedPartition: count table drift");
  for (std::size_t k = 0; k < k_count; ++k) {
    int t = 0;
    for (const auto& row : counts) t += row[k];
    if (t != totals_[k]) throw std::logic_error("GroupedPartition: column total drift");
    if (t == 0) throw std::logic_error("GroupedPartition: empty cluster retained");
  }
}

// ---------------------------------------------------------------------------
// Probability functions

namespace {

void require_matching_groups(std::size_t groups, const BnbpParams& params) {
  params.validate();
  if (groups != params.num_groups()) {
    throw std::invalid_argument("BNBP: " + std::to_string(groups) + " groups but " +
                                std::to_string(params.num_groups()) + " dispersions");
  }
}

double log_mass_term(const BnbpParams& params) {
  return -params.gamma0 * (digamma(params.c + params.r_dot()) - digamma(params.c));
}

// log [Gamma(n.) Gamma(c+r.) / Gamma(c+n.+r.) * prod_j Gamma(n_j+r_j)/Gamma(r_j)]
// plus -ln n_j! per entry when `with_factorials` is set.
double log_column_weight(std::span<const int> column, const BnbpParams& params, bool with_factorials) {
  const double r_dot = params.r_dot();
  long long total = 0;
  double acc = 0.0;
  for (std::size_t j = 0; j < column.size(); ++j) {
    const int n = column[j];
    if (n == 0) continue;
    total += n;
    acc += ln_gamma(n + params.r[j]) - ln_gamma(params.r[j]);
    if (with_factorials) acc -= ln_factorial(n);
  }
  const double nd = static_cast<double>(total);
  return acc + ln_gamma(nd) + ln_gamma(params.c + r_dot) - ln_gamma(params.c + nd + r_dot);
}

}  // namespace

double ecpf_log(const CountMatrix& counts, const BnbpParams& params) {
  require_matching_groups(counts.rows(), params);
  double acc = log_mass_term(params) + static_cast<double>(counts.cols()) * std::log(params.gamma0);
  for (std::size_t j = 0; j < counts.rows(); ++j) acc -= ln_factorial(counts.row_total(j));
  for (std::size_t k = 0; k < counts.cols(); ++k) {
    acc += log_column_weight(counts.column(k), params, false);
  }
  return acc;
}

double ecpf_log(const GroupedPartition& partition, const BnbpParams& params) {
  if (!partition.fully_assigned()) {
    throw std::invalid_argument("ecpf_log: inconsistent partition (unassigned tokens)");
  }
  return ecpf_log(partition.count_matrix(), params);
}

double count_matrix_log_prob(const CountMatrix& counts, const BnbpParams& params) {
  require_matching_groups(counts.rows(), params);
  const auto k_count = static_cast<long long>(counts.cols());
  double acc = log_mass_term(params) + static_cast<double>(k_count) * std::log(params.gamma0) -
               ln_factorial(k_count);
  for (std::size_t k = 0; k < counts.cols(); ++k) {
    acc += log_column_weight(counts.column(k), params, true);
  }
  return acc;
}

CountMatrix count_matrix_prior_sample(std::size_t num_groups, const BnbpParams& params, RngStream& rng) {
  require_matching_groups(num_groups, params);
  const double r_dot = params.r_dot();
  const double mean_k = params.gamma0 * (digamma(params.c + r_dot) - digamma(params.c));
  const auto k_count = static_cast<std::size_t>(sample_poisson(rng, mean_k));
  std::vector<int> data(num_groups * k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto total = digam_sample(r_dot, params.c, rng);
    if (total > std::numeric_limits<int>::max()) {
      throw std::overflow_error("count_matrix_prior_sample: column total " + std::to_string(total) +
                                " does not fit in a count cell; use a larger c");
    }
    const std::vector<int> col = dirmult_sample(static_cast<int>(total), params.r, rng);
    for (std::size_t j = 0; j < num_groups; ++j) data[j * k_count + k] = col[j];
  }
  return CountMatrix(num_groups, k_count, std::move(data));
}

double group_sizes_log_marginal(std::span<const int> group_sizes, const BnbpParams& params, int budget) {
  require_matching_groups(group_sizes.size(), params);
  const std::size_t groups = group_sizes.size();
  int total = 0;
  for (int m : group_sizes) {
    if (m < 0) throw std::invalid_argument("group_sizes_log_marginal: negative group size");
    total += m;
  }
  if (total > budget) {
    throw EppfBudgetExceeded("exact EPPF unavailable at this size: " + std::to_string(total) +
                             " data points exceed the enumeration budget of " + std::to_string(budget));
  }
  if (total == 0) return log_mass_term(params);

  // States are count vectors 0 <= s <= m in mixed radix. A_K(s) sums, over
  // ordered sequences of K nonzero columns adding up to s, the product of
  // the column weights; f(m) = e^{-lambda} sum_K A_K(m) / K!.
  std::vector<std::size_t> stride(groups);
  std::size_t states = 1;
  for (std::size_t j = 0; j < groups; ++j) {
    stride[j] = states;
    states *= static_cast<std::size_t>(group_sizes[j]) + 1;
  }
  std::vector<std::vector<int>> digits(states, std::vector<int>(groups));
  std::vector<int> mass(states, 0);
  for (std::size_t s = 0; s < states; ++s) {
    std::size_t rest = s;
    for (std::size_t j = 0; j < groups; ++j) {
      const auto base = static_cast<std::size_t>(group_sizes[j]) + 1;
      digits[s][j] = static_cast<int>(rest % base);
      rest /= base;
      mass[s] += digits[s][j];
    }
  }

  // Column weights carry gamma0 and a per-point rescaling exp(-shift * n.),
  // which multiplies every full composition by the same exp(-shift * m.).
  std::vector<double> log_w(states, 0.0);
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 1; s < states; ++s) {
    log_w[s] = std::log(params.gamma0) + log_column_weight(digits[s], params, true);
    shift = std::max(shift, log_w[s] / mass[s]);
  }
  std::vector<double> w(states, 0.0);
  for (std::size_t s = 1; s < states; ++s) w[s] = std::exp(log_w[s] - shift * mass[s]);

  auto fits = [&](std::size_t col, std::size_t s) {
    for (std::size_t j = 0; j < groups; ++j) {
      if (digits[col][j] > digits[s][j]) return false;
    }
    return true;
  };

  std::vector<double> prev(states, 0.0);
  std::vector<double> next(states, 0.0);
  prev[0] = 1.0;
  const std::size_t full = states - 1;
  double sum = 0.0;
  double inv_factorial = 1.0;
  for (int k = 1; k <= total; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 1; s < states; ++s) {
      if (mass[s] < k) continue;
      double acc = 0.0;
      for (std::size_t col = 1; col <= s; ++col) {
        if (prev[s - col] == 0.0 || !fits(col, s)) continue;
        acc += w[col] * prev[s - col];
      }
      next[s] = acc;
    }
    inv_factorial /= k;
    sum += next[full] * inv_factorial;
    std::swap(prev, next);
  }
  return log_mass_term(params) + std::log(sum) + shift * total;
}

double eppf_log(const GroupedPartition& partition, const BnbpParams& params, int budget) {
  const std::vector<int> sizes = partition.group_sizes();
  const double log_marginal = group_sizes_log_marginal(sizes, params, budget);
  return ecpf_log(partition, params) - log_marginal;
}

std::vector<double> prediction_weights(const GroupedPartition& partition, std::size_t j, std::size_t i,
                                       const BnbpParams& params) {
  if (partition.assignment(j, i) != GroupedPartition::kUnassigned) {
    throw std::logic_error("prediction_weights: token must be removed from the counts first");
  }
  const double r_dot = params.r_dot();
  const double r_j = params.r[j];
  const int k_count = partition.num_clusters();
  std::vector<double> weights(static_cast<std::size_t>(k_count) + 1);
  for (int k = 0; k < k_count; ++k) {
    const double n_k = partition.column_total(k);
    weights[k] = n_k / (params.c + n_k + r_dot) * (partition.count(j, k) + r_j);
  }
  weights[k_count] = (params.gamma0 / (params.c + r_dot)) * r_j;
  return weights;
}

PartitionRun partition_gibbs_run(std::span<const int> group_sizes, const BnbpParams& params, int iters,
                                 RngStream& rng, const PartitionObserver& observer) {
  require_matching_groups(group_sizes.size(), params);
  if (iters < 0) throw std::invalid_argument("partition_gibbs_run: negative iteration count");
  PartitionRun run{GroupedPartition(std::vector<int>(group_sizes.begin(), group_sizes.end())), {}};
  GroupedPartition& p = run.partition;
  const double r_dot = params.r_dot();

  std::vector<std::pair<std::size_t, std::size_t>> tokens;
  for (std::size_t j = 0; j < group_sizes.size(); ++j) {
    for (int i = 0; i < group_sizes[j]; ++i) tokens.emplace_back(j, static_cast<std::size_t>(i));
  }
  for (const auto& [j, i] : tokens) {
    const auto w = prediction_weights(p, j, i, params);
    p.assign(j, i, static_cast<int>(sample_categorical(rng, w)));
  }
  run.trace.rows.push_back({0, p.num_clusters(), params.gamma0, params.c, r_dot});

  for (int iter = 1; iter <= iters; ++iter) {
    for (std::size_t t = tokens.size(); t > 1; --t) {
      std::swap(tokens[t - 1], tokens[rng.below(t)]);
    }
    for (const auto& [j, i] : tokens) {
      p.unassign(j, i);
      const auto w = prediction_weights(p, j, i, params);
      p.assign(j, i, static_cast<int>(sample_categorical(rng, w)));
    }
    run.trace.rows.push_back({iter, p.num_clusters(), params.gamma0, params.c, r_dot});
    if (observer) observer(iter, p);
  }
  p.canonicalize();
  return run;
}

void write_count_matrix_csv(std::ostream& out, const CountMatrix& counts) {
  for (std::size_t j = 0; j < counts.rows(); ++j) {
    for (std::size_t k = 0; k < counts.cols(); ++k) {
      if (k > 0) out << ',';
      out << counts(j, k);
    }
    out << '\n';
  }
}

}  // namespace bnbp
