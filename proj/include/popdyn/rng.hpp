#pragma once

// Deterministic random streams.
//
// Every stream is a std::mt19937_64 (its output sequence is fixed by the C++
// standard) seeded from SplitMix64(master_seed, stream_index). Uniform reals
// are built from the top 53 bits, so results are bit-identical across
// platforms and standard libraries; std:: distributions are not used.

#include <cmath>
#include <cstdint>
#include <random>

namespace popdyn {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of substream `index` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

class Stream {
public:
    Stream(std::uint64_t master, std::uint64_t index) : engine_(derive_seed(master, index)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1].
    double uniform_open0() { return 1.0 - uniform(); }

    /// Standard exponential.
    double exponential() { return -std::log(uniform_open0()); }

private:
    std::mt19937_64 engine_;
};

}  // namespace popdyn
