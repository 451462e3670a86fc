#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace madkit {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Combines values into a 64-bit stream identifier.
template <typename... Parts>
constexpr std::uint64_t stream_id(Parts... parts) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  ((h = detail::splitmix64(h ^ static_cast<std::uint64_t>(parts))), ...);
  return h;
}

/// Philox4x64-10 counter-based generator.
///
/// The key is (master_seed, stream_id); the 256-bit counter walks the stream.
/// Equal (master_seed, stream_id) pairs give equal sequences on every thread
/// and platform; distinct stream ids give distinct keys and independent
/// sequences without any shared state. Satisfies
/// std::uniform_random_bit_generator.
class RngStream {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : master_seed_(master_seed),
        stream_id_(stream_id),
        key_{master_seed, stream_id} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  result_type operator()() noexcept {
    if (position_ == 4) {
      block_ = philox(counter_, key_);
      increment();
      position_ = 0;
    }
    return block_[position_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in the open interval (0, 1); safe for log and inverse
  /// CDF transforms.
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Raw Philox4x64-10 bijection of one counter block.
  static constexpr Block philox(Block counter, Key key) noexcept {
    constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const unsigned __int128 p0 =
          static_cast<unsigned __int128>(kMul0) * counter[0];
      const unsigned __int128 p1 =
          static_cast<unsigned __int128>(kMul1) * counter[2];
      const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const auto lo0 = static_cast<std::uint64_t>(p0);
      const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
      const auto lo1 = static_cast<std::uint64_t>(p1);
      counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1],
                 lo0};
    }
    return counter;
  }

 private:
  void increment() noexcept {
    for (auto& word : counter_) {
      if (++word != 0) break;
    }
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  Key key_;
  Block counter_{};
  Block block_{};
  int position_ = 4;
};

}  // namespace madkit
