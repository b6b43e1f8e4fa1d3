#pragma once

#include <cstdint>

namespace pucci {

// Deterministic 64-bit generator (splitmix64 step function) with Gaussian
// output via Box-Muller.  Self-contained so that streams are bit-identical
// across platforms, runs, and thread counts.  Normals are consumed in pairs;
// the second member of each pair is cached.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double normal();

    // Stream derivation for per-path seeding: a keyed mix of the master seed
    // and the stream index.  Distinct (master, stream) pairs give independent
    // generators regardless of how work is split across threads.
    static uint64_t derive(uint64_t master, uint64_t stream);

private:
    uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace pucci
