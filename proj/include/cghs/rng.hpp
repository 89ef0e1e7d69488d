#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace cghs {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix(std::uint64_t h, std::uint64_t v) noexcept {
  std::uint64_t s = h ^ (v + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2));
  return splitmix64(s);
}

}  // namespace detail

/// xoshiro256++ (Blackman & Vigna). Small state, so a fresh engine per
/// substream costs four splitmix64 calls instead of a Mersenne-Twister warmup.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed = 0) noexcept { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept {
    for (auto& word : s_) word = detail::splitmix64(seed);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

/// What a substream is used for. Keeps e.g. the imputation stream of row 3
/// and the node-update stream of node 3 in the same sweep apart.
enum class StreamPurpose : std::uint64_t {
  Generic = 0,
  Initialize = 1,
  Impute = 2,
  NodeUpdate = 3,
  Simulate = 4,
  Mask = 5,
  Replication = 6,
};

struct StreamId {
  std::uint64_t sweep = 0;
  std::uint64_t unit = 0;
  StreamPurpose purpose = StreamPurpose::Generic;
};

/// Deterministic random stream keyed by (seed, stream id). Two streams built
/// from the same key produce the same sequence regardless of which thread
/// owns them.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, StreamId id = {}) : engine_(key(seed, id)) {}

  static std::uint64_t key(std::uint64_t seed, StreamId id) noexcept {
    std::uint64_t h = detail::mix(seed, static_cast<std::uint64_t>(id.purpose));
    h = detail::mix(h, id.sweep);
    return detail::mix(h, id.unit);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do {
      u = std::generate_canonical<double, 53>(engine_);
    } while (u <= 0.0);
    return u;
  }

  double normal() { return normal_(engine_); }

  double gamma(double shape, double rate) {
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
  }

  Xoshiro256pp& engine() noexcept { return engine_; }

 private:
  Xoshiro256pp engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cghs
