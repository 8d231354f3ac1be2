#pragma once

#include <ostream>
#include <vector>

namespace bnbp {

struct TraceRow {
  int iter = 0;
  int num_topics = 0;  // K_J
  double gamma0 = 0.0;
  double c = 0.0;
  double r_dot = 0.0;
};

// Per-iteration scalars of one chain. Row 0 is the initial state.
struct ChainTrace {
  std::vector<TraceRow> rows;
};

// CSV with header `iter,K_J,gamma0,c,r_dot`.
void write_trace_csv(std::ostream& out, const ChainTrace& trace);

}  // namespace bnbp
