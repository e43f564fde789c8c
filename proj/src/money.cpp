#include "cascade/money.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "cascade/error.hpp"

namespace cascade {

namespace {

std::int64_t checked(__int128 v) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
        throw Error(ErrorCode::Overflow, "money arithmetic overflow");
    }
    return static_cast<std::int64_t>(v);
}

// Smallest k with 10^k divisible by d, if d has no prime factors other than 2 and 5.
std::optional<unsigned> terminating_digits(BigInt d) {
    unsigned twos = 0, fives = 0;
    while (d % 2 == 0) { d /= 2; ++twos; }
    while (d % 5 == 0) { d /= 5; ++fives; }
    if (d != 1) return std::nullopt;
    return std::max(twos, fives);
}

std::string place_point(BigInt scaled, unsigned digits) {
    bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    std::string s = scaled.str();
    if (digits > 0) {
        if (s.size() <= digits) s.insert(0, digits - s.size() + 1, '0');
        s.insert(s.size() - digits, ".");
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    return negative ? "-" + s : s;
}

}  // namespace

Money& Money::operator+=(Money rhs) {
    minor_ = checked(static_cast<__int128>(minor_) + rhs.minor_);
    return *this;
}

Money& Money::operator-=(Money rhs) {
    minor_ = checked(static_cast<__int128>(minor_) - rhs.minor_);
    return *this;
}

Money apply_bps(Money amount, std::int64_t bps) {
    __int128 n = static_cast<__int128>(amount.minor()) * bps;
    __int128 q = n / 10000;
    __int128 r = n % 10000;
    if (r < 0) { r += 10000; q -= 1; }  // floor division
    if (r > 5000 || (r == 5000 && (q & 1) != 0)) q += 1;
    return Money{checked(q)};
}

std::string rational_to_string(const Rational& r) {
    BigInt num = boost::multiprecision::numerator(r);
    BigInt den = boost::multiprecision::denominator(r);
    auto digits = terminating_digits(den);
    if (!digits) return num.str() + "/" + den.str();
    BigInt scale = boost::multiprecision::pow(BigInt(10), *digits);
    return place_point(num * (scale / den), *digits);
}

Rational parse_rational(const std::string& text) {
    auto fail = [&] { return Error(ErrorCode::ParseError, "malformed rational '" + text + "'"); };
    if (text.empty()) throw fail();
    auto slash = text.find('/');
    auto all_digits = [](std::string_view s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    };
    // Digit strings go through this so a leading zero is never read as an octal prefix.
    auto decimal = [](std::string_view digits) {
        BigInt v = 0;
        for (char c : digits) v = v * 10 + (c - '0');
        return v;
    };
    if (slash != std::string::npos) {
        std::string_view num(text.data(), slash), den(text.data() + slash + 1, text.size() - slash - 1);
        if (!all_digits(num) || !all_digits(den)) throw fail();
        BigInt d = decimal(den);
        if (d == 0) throw fail();
        return Rational(decimal(num), d);
    }
    std::string_view body = text;
    bool negative = false;
    if (body.front() == '-') { negative = true; body.remove_prefix(1); }
    auto dot = body.find('.');
    std::string_view whole = body.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
    if (!all_digits(whole) || (dot != std::string_view::npos && !all_digits(frac))) throw fail();
    BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(frac.size()));
    BigInt num = decimal(whole) * scale + decimal(frac);
    Rational value(num, scale);
    return negative ? Rational(-value) : value;
}

std::string to_major_string(const Rational& minor_amount, std::int64_t minor_per_major) {
    Rational major = minor_amount / Rational(minor_per_major);
    if (terminating_digits(boost::multiprecision::denominator(major))) return rational_to_string(major);
    // Non-terminating (e.g. a Monte Carlo mean over N not a power of ten): 12 places, half-even.
    constexpr unsigned places = 12;
    BigInt scale = boost::multiprecision::pow(BigInt(10), places);
    Rational scaled = major * Rational(scale);
    BigInt num = boost::multiprecision::numerator(scaled), den = boost::multiprecision::denominator(scaled);
    BigInt q = num / den, r = num % den;
    if (r < 0) { r += den; q -= 1; }
    if (2 * r > den || (2 * r == den && q % 2 != 0)) q += 1;
    return place_point(q, places);
}

}  // namespace cascade
