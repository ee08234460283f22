#include "goikit/random.hpp"

namespace goikit {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t base_seed, std::uint64_t stream_id) {
  std::uint64_t state = base_seed ^ (0xd1b54a32d192ed03ULL * (stream_id + 1));
  std::uint32_t words[8];
  for (int i = 0; i < 8; i += 2) {
    const std::uint64_t v = splitmix64(state);
    words[i] = static_cast<std::uint32_t>(v);
    words[i + 1] = static_cast<std::uint32_t>(v >> 32);
  }
  std::seed_seq mixed(std::begin(words), std::end(words));
  return std::mt19937_64(mixed);
}

}  // namespace

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
    : base_seed_(base_seed),
      stream_id_(stream_id),
      engine_(seeded_engine(base_seed, stream_id)) {}

RngStream rng_stream(std::uint64_t base_seed, std::uint64_t stream_id) {
  return RngStream(base_seed, stream_id);
}

std::uint64_t stream_key(std::uint64_t experiment, std::uint64_t a,
                         std::uint64_t b, std::uint64_t c) {
  std::uint64_t state = experiment;
  std::uint64_t key = splitmix64(state);
  for (std::uint64_t part : {a, b, c}) {
    state ^= part + 0x632be59bd9b4e019ULL;
    key ^= splitmix64(state);
  }
  return key;
}

}  // namespace goikit
