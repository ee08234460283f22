#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace goikit {

/// Reproducible random sub-stream. The same (base_seed, stream_id) pair yields
/// the same draws on every run, independent of how trials are scheduled.
/// A stream must be owned by a single task at a time.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id);

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return normal_(engine_); }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t base_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

RngStream rng_stream(std::uint64_t base_seed, std::uint64_t stream_id);

/// Packs a small tuple of grid coordinates into a stream id.
std::uint64_t stream_key(std::uint64_t experiment, std::uint64_t a,
                         std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace goikit
