#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace stochlin {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The 128-bit
// counter is (draw index : 64, stream : 64) and the 64-bit key is the master
// seed, so any (seed, stream, draw) triple is addressable without coordination
// between tasks.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block encrypt(Block counter, Key key);
};

// Stream identifier: a replication index and a worker index within it.
struct StreamId {
  std::uint32_t replication = 0;
  std::uint32_t worker = 0;
};

// UniformRandomBitGenerator over Philox blocks; each block yields two 64-bit
// outputs. Cheap to copy; each concurrent task owns its own instance.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, StreamId stream, std::uint64_t first_draw = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  std::uint64_t seed() const { return seed_; }
  StreamId stream() const { return stream_; }
  std::uint64_t draws() const { return draw_; }

  // Uniform double in [0, 1) from the top 53 bits of one output.
  double uniform01();

 private:
  std::uint64_t seed_;
  StreamId stream_;
  std::uint64_t draw_;  // block index
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

// Reserved replication ids for streams that are not Monte-Carlo replications.
inline constexpr std::uint32_t kExpectationStream = 0xFFFFFF00u;
inline constexpr std::uint32_t kValidationStream = 0xFFFFFF01u;
inline constexpr std::uint32_t kGeneratorStream = 0xFFFFFF02u;

}  // namespace stochlin
