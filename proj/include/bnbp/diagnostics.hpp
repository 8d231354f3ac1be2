#pragma once

#include "bnbp/trace.hpp"

namespace bnbp {

// The band around the collection-window mean has half-width
// max(band * mean, spread * sd), where sd is the standard deviation of the
// full-window rolling means inside the collection window.
struct StabilizationRule {
  int window = 50;      // trailing rolling-mean window, in iterations
  double band = 0.10;   // relative half-width floor
  double spread = 3.0;  // multiple of the stationary rolling-mean sd
};

struct TraceSummary {
  int iterations = 0;        // last iteration recorded
  int burn_in = 0;           // iterations discarded before collection
  double mean_topics = 0.0;  // mean K_J over the collection window
  // First iteration t >= 1 after which the trailing rolling mean of K_J stays
  // within the band for good; iterations + 1 if it never settles.
  double band_half_width = 0.0;
  int stabilization_iter = 0;
};

// `collect` is the length of the collection window at the end of the trace
// (clamped to the available iterations).
TraceSummary trace_diagnostics(const ChainTrace& trace, int collect, const StabilizationRule& rule = {});

}  // namespace bnbp
