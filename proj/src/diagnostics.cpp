#include "bnbp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace bnbp {

void write_trace_csv(std::ostream& out, const ChainTrace& trace) {
  out << "iter,K_J,gamma0,c,r_dot\n";
  const auto precision = out.precision(10);
  for (const auto& row : trace.rows) {
    out << row.iter << ',' << row.num_topics << ',' << row.gamma0 << ',' << row.c << ',' << row.r_dot << '\n';
  }
  out.precision(precision);
}

TraceSummary trace_diagnostics(const ChainTrace& trace, int collect, const StabilizationRule& rule) {
  // Row 0 (initial state) is excluded; rows 1..T are the sampled iterations.
  std::vector<double> k;
  for (const auto& row : trace.rows) {
    if (row.iter >= 1) k.push_back(row.num_topics);
  }
  if (k.empty()) throw std::invalid_argument("trace_diagnostics: trace has no sampled iterations");
  if (rule.window < 1 || !(rule.band > 0.0) || !(rule.spread >= 0.0)) throw std::invalid_argument("trace_diagnostics: bad rule");

  const int T = static_cast<int>(k.size());
  TraceSummary summary;
  summary.iterations = T;
  const int window = std::clamp(collect, 1, T);
  summary.burn_in = T - window;
  double sum = 0.0;
  for (int t = summary.burn_in; t < T; ++t) sum += k[t];
  summary.mean_topics = sum / window;

  // Trailing rolling mean at iteration t (1-based) over max(1, t-w+1)..t.
  std::vector<double> rolling(static_cast<std::size_t>(T));
  double acc = 0.0;
  for (int t = 0; t < T; ++t) {
    acc += k[t];
    if (t >= rule.window) acc -= k[t - rule.window];
    rolling[t] = acc / std::min(t + 1, rule.window);
  }
  const int first_full = std::max(summary.burn_in, rule.window - 1);
  double sd = 0.0;
  if (first_full < T) {
    double m = 0.0, ss = 0.0;
    for (int t = first_full; t < T; ++t) m += rolling[t];
    m /= T - first_full;
    for (int t = first_full; t < T; ++t) ss += (rolling[t] - m) * (rolling[t] - m);
    sd = std::sqrt(ss / (T - first_full));
  }
  const double half = std::max(rule.band * summary.mean_topics, rule.spread * sd);
  summary.band_half_width = half;
  const double lo = summary.mean_topics - half;
  const double hi = summary.mean_topics + half;
  int settled = T + 1;
  for (int t = T - 1; t >= 0; --t) {
    if (rolling[t] < lo || rolling[t] > hi) break;
    settled = t + 1;
  }
  summary.stabilization_iter = settled;
  return summary;
}

}  // namespace bnbp
