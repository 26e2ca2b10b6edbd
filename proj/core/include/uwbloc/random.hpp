#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace uwbloc {

using Rng = std::mt19937_64;

/// Splits one scenario seed into independent named sub-streams, so that
/// enabling one noise source never shifts another source's sequence.
class RandomStreams {
 public:
  explicit RandomStreams(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng stream(std::string_view name) const;

 private:
  std::uint64_t seed_;
};

inline double draw_gaussian(Rng& rng, double mean, double sigma) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return mean + sigma * dist(rng);
}

inline double draw_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

}  // namespace uwbloc
