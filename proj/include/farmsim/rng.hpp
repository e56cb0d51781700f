#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>

#include "farmsim/types.hpp"

namespace farmsim {

struct RngState {
    std::uint64_t s = 0;
};

// One SplitMix64 step. Pure: the output stream depends only on the seed.
inline std::pair<std::uint64_t, RngState> rng_next(RngState state) {
    state.s += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state.s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    return {z, state};
}

// Convenience wrapper holding the single per-run stream. All stochastic
// choices in a run draw from one of these, in dispatch order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_{seed} {}

    std::uint64_t next() {
        auto [value, next_state] = rng_next(state_);
        state_ = next_state;
        return value;
    }

    // Uniform in [0, 1): value / 2^64.
    double uniform01() { return static_cast<double>(next()) * 0x1.0p-64; }

    // Exponential inter-arrival gap for rate `rate_per_sec`, in whole
    // microseconds rounded half-up, never less than 1.
    SimTime exponential_us(double rate_per_sec);

    RngState state() const { return state_; }

private:
    RngState state_;
};

class NonPositiveRate : public std::invalid_argument {
public:
    NonPositiveRate() : std::invalid_argument("exponential rate must be > 0") {}
};

// -ln(1-u)/rate, in whole microseconds rounded half-up, clamped to >= 1.
SimTime exponential_us_from_uniform(double u, double rate_per_sec);

}  // namespace farmsim
