#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace smid {

/// SplitMix64 generator. Satisfies UniformRandomBitGenerator, so it plugs
/// into the <random> distributions. Its state is a single word, which makes
/// it cheap to create one independent stream per observation or per run.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Deterministically derives the seed of sub-stream `stream` from `seed`.
/// Distinct (seed, stream) pairs give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Stream id for a named stage, so adding or removing other stages does not
/// shift a stage's stream.
std::uint64_t stream_id(std::string_view name) noexcept;

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                    std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(SplitMix64& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Draws an index from a discrete distribution given by `weights`
/// (need not be normalized; must have a positive sum).
std::size_t sample_categorical(std::span<const double> weights, SplitMix64& rng);

}  // namespace smid
