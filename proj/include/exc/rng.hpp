#pragma once

#include <cmath>
#include <cstdint>

namespace exc {

// Counter-based generator: output i of stream s is mix(phi(s) + i*GAMMA),
// i.e. a SplitMix64 walk. Streams never collide regardless of how replicas
// are scheduled across threads, which is what the reproducibility contract
// rests on.
class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0)
        : state_(mix(seed ^ mix(stream))) {}

    static constexpr uint64_t GAMMA = 0x9e3779b97f4a7c15ULL;

    static uint64_t mix(uint64_t z) {
        z += GAMMA;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t next_u64() {
        state_ += GAMMA;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1).
    double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe to feed to log.
    double uniform01_open_below() {
        return ((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double exponential(double rate) {
        return -std::log(uniform01_open_below()) / rate;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Unbiased integer in [0, n) by rejection.
    uint64_t below(uint64_t n) {
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

private:
    uint64_t state_;
};

// Stream id convention for replica ensembles.
inline Rng replica_rng(uint64_t seed, uint64_t replica) {
    return Rng(seed, Rng::mix(replica));
}

} // namespace exc
