#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace repdisc {

/// Reproducible random stream keyed by (seed, stream_id).
///
/// The engine is std::mt19937_64 seeded through std::seed_seq, both of which
/// are fully specified by the standard. The uniform and normal transforms are
/// written out here because the std distributions differ between library
/// implementations. Not thread-safe; give each worker its own stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// A child stream derived deterministically from this stream's key.
  RngStream derive(std::uint64_t child) const {
    return RngStream(seed_ ^ (0xd1b54a32d192ed03ULL * (stream_id_ + 1)), child);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace repdisc
