#include "bnbp/rng.hpp"

#include <sstream>
#include <stdexcept>

namespace bnbp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

RngStream RngStream::split(std::string_view label) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(fnv1a(label))));
}

RngStream RngStream::split(std::uint64_t index) const {
  return RngStream(splitmix64(splitmix64(seed_) + splitmix64(index + 0x5851f42d4c957f2dULL)));
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RngStream::below: empty range");
  // Rejecting the short final block keeps the result exactly uniform.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::string RngStream::save_state() const {
  std::ostringstream out;
  out << seed_ << ' ' << engine_;
  return out.str();
}

void RngStream::restore_state(const std::string& state) {
  std::istringstream in(state);
  in >> seed_ >> engine_;
  if (!in) throw std::invalid_argument("RngStream: malformed saved state");
}

}  // namespace bnbp
