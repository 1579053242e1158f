#include "stochlin/rng.hpp"

namespace stochlin {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Block Philox4x32::encrypt(Block c, Key k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

StreamRng::StreamRng(std::uint64_t seed, StreamId stream, std::uint64_t first_draw)
    : seed_(seed), stream_(stream), draw_(first_draw) {}

StreamRng::result_type StreamRng::operator()() {
  if (buffered_ == 0) {
    const Philox4x32::Block ctr{static_cast<std::uint32_t>(draw_),
                                static_cast<std::uint32_t>(draw_ >> 32), stream_.worker,
                                stream_.replication};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed_),
                              static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = Philox4x32::encrypt(ctr, key);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
    ++draw_;
  }
  return buffer_[2 - buffered_--];
}

double StreamRng::uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

}  // namespace stochlin
