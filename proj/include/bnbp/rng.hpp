#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace bnbp {

// A seeded random stream. Every sampler in the library draws exclusively
// from one of these, so a run is a pure function of its seed.
//
// Streams are single-owner. Parallel work uses substreams obtained with
// split(), which depend only on (seed, label) and never on how much of the
// parent stream has been consumed.
class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(std::uint64_t seed);

  RngStream split(std::string_view label) const;
  RngStream split(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe to pass to log().
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Engine& engine() { return engine_; }

  // Full engine state as text, restorable with restore_state().
  std::string save_state() const;
  void restore_state(const std::string& state);

 private:
  std::uint64_t seed_;
  Engine engine_;
};

}  // namespace bnbp
