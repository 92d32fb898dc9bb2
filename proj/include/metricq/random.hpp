#ifndef METRICQ_RANDOM_HPP
#define METRICQ_RANDOM_HPP

// Counter-based random streams. A stream is identified by (seed, stream id);
// its output is a pure function of that pair, so replications can be
// generated in any order or on any thread and still reproduce exactly.

#include <array>
#include <cstdint>
#include <limits>

namespace metricq {

/// Philox4x32-10 (Salmon et al., SC'11) as a UniformRandomBitGenerator.
/// Key = seed, counter = (block index, stream id).
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  void discard(std::uint64_t z);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// One 4-word block for an explicit counter; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned used_ = 4;
};

/// Mixes a parent seed and a tag into a child seed (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Philox4x32& rng);

}  // namespace metricq

#endif  // METRICQ_RANDOM_HPP
