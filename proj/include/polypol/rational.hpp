#pragma once

// Exact rationals backed by GMP. Every constant, probability and weight in
// polypol is a Rational; there is no floating-point path.

#include <gmpxx.h>

#include <cctype>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

namespace polypol {

using Rational = mpq_class;
using Integer = mpz_class;

inline Rational make_rational(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

/// Parses `integer ('/' positive-integer)?`. Returns nullopt on anything else.
inline std::optional<Rational> parse_rational(std::string_view text) {
    auto is_digits = [](std::string_view s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        return true;
    };
    std::string_view num = text;
    std::string_view den;
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        num = text.substr(0, slash);
        den = text.substr(slash + 1);
        if (!is_digits(den)) return std::nullopt;
    }
    std::string_view magnitude = num;
    if (!magnitude.empty() && (magnitude.front() == '-' || magnitude.front() == '+'))
        magnitude.remove_prefix(1);
    if (!is_digits(magnitude)) return std::nullopt;

    Integer n(std::string(magnitude), 10);
    if (num.front() == '-') n = -n;
    Integer d = 1;
    if (!den.empty()) {
        d = Integer(std::string(den), 10);
        if (d == 0) return std::nullopt;
    }
    Rational r(n, d);
    r.canonicalize();
    return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

/// Display-only decimal rendering (`--decimal`); never fed back into computation.
inline std::string to_decimal_string(const Rational& r, int digits = 6) {
    std::ostringstream out;
    out << std::setprecision(digits) << r.get_d();
    return out.str();
}

}  // namespace polypol
