#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "bnbp/corpus.hpp"
#include "bnbp/lda.hpp"
#include "bnbp/topic_model.hpp"

namespace bnbp {

// Plain-text chain checkpoint:
//
//   # bnbp checkpoint v1
//   model bnbp|lda
//   iteration <n>
//   seed <u64>
//   rng <engine state>
//   docs <J>
//   terms <V>
//   eta <x>
//   ... model parameters, one "key values..." line each ...
//   assignments
//   <m_j> <term>:<topic> ...        (one line per document)
//
// Reals are written with 17 significant digits so a reload is exact.
struct CheckpointMeta {
  int iteration = 0;
  std::uint64_t seed = 0;
  std::string rng_state;
};

void write_checkpoint(std::ostream& out, const TopicModelState& state, const CheckpointMeta& meta);
void write_checkpoint(std::ostream& out, const LdaState& state, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  std::string model;  // "bnbp" or "lda"
  CheckpointMeta meta;
  Corpus corpus;      // training tokens, without vocabulary strings
  std::optional<TopicModelState> bnbp;
  std::optional<LdaState> lda;
};

LoadedCheckpoint read_checkpoint(std::istream& in);

}  // namespace bnbp
