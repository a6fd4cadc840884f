#pragma once

#include <array>
#include <cstdint>

// Seeded, splittable random streams. A stream is a value (seed, stream_id);
// the generated sequence depends on nothing else, so replicated runs are
// bit-identical on every platform and independent of thread scheduling.
// Independent units of work (study, group, bootstrap replicate) each get
// their own stream via stream_hash.

namespace medipool::rng {

struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_hash(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = a;
    std::uint64_t h = splitmix64(s);
    s = h ^ (b + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2));
    h = splitmix64(s);
    s = h ^ (c + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2));
    return splitmix64(s);
}

inline RngStream substream(RngStream s, std::uint64_t a, std::uint64_t b = 0) {
    return {s.seed, stream_hash(s.stream_id, a, b)};
}

/// xoshiro256++ with splitmix-scrambled seeding from (seed, stream_id).
class Engine {
  public:
    explicit Engine(RngStream s) {
        std::uint64_t st = s.seed;
        (void)splitmix64(st);
        st ^= 0x9E3779B97F4A7C15ull * (s.stream_id + 1);
        for (auto& w : state_) w = splitmix64(st);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw strictly inside (0, 1).
    double uniform01() { return (double(next() >> 11) + 0.5) * 0x1.0p-53; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> state_{};
};

} // namespace medipool::rng
