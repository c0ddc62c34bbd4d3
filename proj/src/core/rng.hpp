#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace drcut {

// Deterministic random stream addressed by (master seed, stream index).
// Subject i of a cohort always consumes stream i regardless of how the work
// is scheduled across threads, so simulations are bit-reproducible for a
// given seed. Uniform and exponential draws are built from raw engine bits
// because the std distributions are implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(master_seed),
            static_cast<std::uint32_t>(master_seed >> 32),
            static_cast<std::uint32_t>(stream_index),
            static_cast<std::uint32_t>(stream_index >> 32),
        };
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0, 1): 53-bit mantissa, offset by half an
    // ulp so 0 and 1 are never returned.
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Exponential with the given rate (rate > 0).
    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    std::mt19937_64 engine_;
};

}  // namespace drcut
