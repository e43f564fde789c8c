#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace cascade {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Exact amount in minor currency units. Arithmetic throws on overflow.
class Money {
public:
    constexpr Money() = default;
    constexpr explicit Money(std::int64_t minor) : minor_(minor) {}

    constexpr std::int64_t minor() const { return minor_; }

    static constexpr Money zero() { return Money{0}; }
    static constexpr Money unbounded() { return Money{std::numeric_limits<std::int64_t>::max()}; }

    constexpr bool is_unbounded() const { return minor_ == std::numeric_limits<std::int64_t>::max(); }

    Money& operator+=(Money rhs);
    Money& operator-=(Money rhs);

    friend Money operator+(Money a, Money b) { return a += b; }
    friend Money operator-(Money a, Money b) { return a -= b; }

    friend constexpr auto operator<=>(Money, Money) = default;
    friend constexpr bool operator==(Money, Money) = default;

    std::string str() const { return std::to_string(minor_); }

private:
    std::int64_t minor_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, Money m) { return os << m.minor(); }

constexpr Money min(Money a, Money b) { return a < b ? a : b; }
constexpr Money max(Money a, Money b) { return a < b ? b : a; }
constexpr Money positive_part(Money a) { return a.minor() > 0 ? a : Money{0}; }

// amount * bps / 10000, rounded half-to-even.
Money apply_bps(Money amount, std::int64_t bps);

// Exact decimal rendering of a rational with terminating expansion, else "p/q".
std::string rational_to_string(const Rational& r);

// Parses "0.25", "1", "1/3". Throws cascade::Error(ParseError) on malformed input.
Rational parse_rational(const std::string& text);

// Renders minor units as a decimal string in major units (minor_per_major must be a power of 10).
std::string to_major_string(const Rational& minor_amount, std::int64_t minor_per_major);

}  // namespace cascade
