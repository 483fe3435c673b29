#pragma once

// Exact rational arithmetic for all utility, transfer and welfare values.
// Equality tests throughout the library are exact; nothing here may ever
// pass through floating point.

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tusc {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline BigInt rational_num(const Rational& r) { return numerator(r); }
inline BigInt rational_den(const Rational& r) { return denominator(r); }

// Renders "p" for integers and "p/q" otherwise. Machine reports use this
// form exclusively; no decimal rendering anywhere.
inline std::string rational_str(const Rational& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

// Accepts "p", "p/q" and "-p/q". Rejects zero denominators and any
// trailing garbage.
inline std::optional<Rational> try_parse_rational(std::string_view s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string_view::npos) {
            BigInt num{std::string(s)};
            return Rational(num);
        }
        BigInt num{std::string(s.substr(0, slash))};
        BigInt den{std::string(s.substr(slash + 1))};
        if (den == 0) return std::nullopt;
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        return std::nullopt;
    }
}

inline Rational parse_rational(std::string_view s) {
    auto r = try_parse_rational(s);
    if (!r) throw std::invalid_argument("malformed rational: " + std::string(s));
    return *r;
}

} // namespace tusc
