#pragma once

// Deterministic random streams.
//
// All randomness goes through SplitMix64 (Steele, Lea & Flood 2014): state
// advances by the golden-ratio increment 0x9E3779B97F4A7C15 and each output
// is the state passed through the mix64 finalizer below. Independent streams
// are obtained with derive_seed(master, tag, index), so the value drawn for
// tree i or generated config i never depends on thread scheduling.

#include <cstdint>
#include <limits>

namespace surrogate {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream families. Values are part of the reproducibility contract.
enum class StreamTag : std::uint64_t {
  kTree = 1,
  kConfig = 2,
  kToyRun = 3,
  kSplit = 4,
  kToyCorpus = 5,
  kTrain = 6,
  kGenerate = 7,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                                    std::uint64_t index) noexcept {
  const std::uint64_t family =
      mix64(master ^ mix64(static_cast<std::uint64_t>(tag) * kGoldenGamma));
  return mix64(family + (index + 1) * kGoldenGamma);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Uniform double in the open interval (0, 1): 53 random bits, centred in
/// their bucket so neither endpoint is ever produced.
template <typename Rng>
double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Unbiased integer in [0, bound) by Lemire's multiply-and-reject method.
template <typename Rng>
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Fisher-Yates shuffle driven by uniform_index, so permutations are
/// reproducible across standard libraries (std::shuffle is not).
template <typename Rng, typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = uniform_index(rng, i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace surrogate
