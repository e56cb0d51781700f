#include "farmsim/rng.hpp"

#include <cmath>

namespace farmsim {

SimTime exponential_us_from_uniform(double u, double rate_per_sec) {
    if (!(rate_per_sec > 0.0)) throw NonPositiveRate();
    const double seconds = -std::log1p(-u) / rate_per_sec;
    const double micros = std::floor(seconds * 1e6 + 0.5);
    if (micros < 1.0) return 1;
    return static_cast<SimTime>(micros);
}

SimTime Rng::exponential_us(double rate_per_sec) {
    return exponential_us_from_uniform(uniform01(), rate_per_sec);
}

}  // namespace farmsim
