#include "cascade/random.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

namespace cascade::rng {

namespace {

constexpr std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr double kTwoPow53 = 9007199254740992.0;

}  // namespace

std::uint64_t hash(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto w : words) h = splitmix(h ^ splitmix(w));
    return h;
}

double uniform(std::uint64_t h) { return static_cast<double>(bits53(h)) / kTwoPow53; }

double open_uniform(std::uint64_t h) { return (static_cast<double>(bits53(h)) + 0.5) / kTwoPow53; }

bool below_bps(std::uint64_t h, std::int64_t numerator, std::int64_t denominator) {
    if (numerator <= 0) return false;
    if (numerator >= denominator) return true;
    return static_cast<unsigned __int128>(bits53(h)) * static_cast<unsigned __int128>(denominator) <
           static_cast<unsigned __int128>(numerator) << 53;
}

double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double standard_normal(std::uint64_t h) { return normal_quantile(open_uniform(h)); }

}  // namespace cascade::rng
