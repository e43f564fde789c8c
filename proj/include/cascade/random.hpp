#pragma once

#include <cstdint>
#include <initializer_list>

namespace cascade::rng {

// Counter-based stream: every draw is a pure function of its key words, so results
// do not depend on generation order or thread count.
std::uint64_t hash(std::initializer_list<std::uint64_t> words);

// 53-bit integer in [0, 2^53).
inline std::uint64_t bits53(std::uint64_t h) { return h >> 11; }

// Uniform in [0, 1).
double uniform(std::uint64_t h);

// Uniform in (0, 1), for inverse-CDF sampling.
double open_uniform(std::uint64_t h);

// True with probability bps / 10000 exactly (up to 2^-53 resolution).
bool below_bps(std::uint64_t h, std::int64_t numerator, std::int64_t denominator = 10000);

double standard_normal(std::uint64_t h);

// Standard normal quantile; -inf at 0 and +inf at 1.
double normal_quantile(double p);

// Stream tags.
enum : std::uint64_t {
    kDefaultDraw = 1,
    kPrepayDraw = 2,
    kCommonFactor = 3,
    kIdiosyncratic = 4,
    kDesignDraw = 5,
};

}  // namespace cascade::rng
