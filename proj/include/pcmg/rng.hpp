#pragma once
#include <cstdint>

namespace pcmg {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11 "Parallel random
// numbers: as easy as 1, 2, 3"). Pure integer arithmetic, so every platform and
// every process produces identical streams. Keying convention used throughout:
//   key     = 64-bit run seed (lo word, hi word)
//   counter = (sample_index lo, sample_index hi, draw_index, stream)
// Each draw consumes one counter block; draw k of sample i never depends on any
// other sample, which is what makes partitioned/distributed generation merge
// byte-identically with a single-process run. See docs/determinism.md.
struct Philox4x32 {
  static constexpr std::uint32_t M0 = 0xD2511F53u;
  static constexpr std::uint32_t M1 = 0xCD9E8D57u;
  static constexpr std::uint32_t W0 = 0x9E3779B9u;
  static constexpr std::uint32_t W1 = 0xBB67AE85u;

  struct Block {
    std::uint32_t v[4];
  };

  static Block block(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                     std::uint32_t c3, std::uint32_t k0, std::uint32_t k1) {
    Block b{{c0, c1, c2, c3}};
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k0 += W0;
        k1 += W1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * b.v[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * b.v[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      b.v[0] = hi1 ^ b.v[1] ^ k0;
      b.v[1] = lo1;
      b.v[2] = hi0 ^ b.v[3] ^ k1;
      b.v[3] = lo0;
    }
    return b;
  }
};

// Per-sample stream of uniforms. Cheap to construct; holds no state beyond the
// next draw index.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t sample_index,
             std::uint32_t stream = 0)
      : seed_(seed), sample_(sample_index), stream_(stream) {}

  // raw 64 bits: (out0 << 32) | out1 of the philox block
  std::uint64_t bits() {
    const auto b = Philox4x32::block(
        static_cast<std::uint32_t>(sample_), static_cast<std::uint32_t>(sample_ >> 32),
        draw_++, stream_,
        static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32));
    return (static_cast<std::uint64_t>(b.v[0]) << 32) | b.v[1];
  }

  // uniform in [0,1): top 53 bits
  double uniform() {
    return static_cast<double>(bits() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // uniform integer in [0,n), Lemire multiply-shift (n >= 1)
  std::uint32_t pick(std::uint32_t n) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(bits()) * n) >> 64);
  }

  std::uint32_t draws_consumed() const { return draw_; }

 private:
  std::uint64_t seed_;
  std::uint64_t sample_;
  std::uint32_t stream_;
  std::uint32_t draw_ = 0;
};

}  // namespace pcmg
