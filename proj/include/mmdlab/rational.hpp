#pragma once

// Exact arithmetic carriers. Rational is GMP's canonical mpq (reduced,
// denominator positive); Integer is mpz. Everything geometric in the
// library is built on these; doubles appear only when reporting.

#include <gmpxx.h>

#include <cmath>
#include <compare>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

#include "mmdlab/error.hpp"

namespace mmdlab {

using Rational = mpq_class;
using Integer = mpz_class;

inline Rational make_rational(const Integer& num, const Integer& den = 1) {
    if (den == 0) throw DomainError("rational with zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline Rational make_rational(long num, long den = 1) {
    return make_rational(Integer(num), Integer(den));
}

// Accepts "p/q", "-p/q" and plain integers. Decimal literals are rejected
// so that no input ever passes through floating point.
inline Rational parse_rational(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    std::string s(text);
    if (s.empty()) throw ParseError("empty rational literal");
    std::size_t pos = 0;
    if (s[0] == '+' || s[0] == '-') pos = 1;
    bool seen_slash = false;
    bool digits_before = false, digits_after = false;
    for (std::size_t i = pos; i < s.size(); ++i) {
        char c = s[i];
        if (c >= '0' && c <= '9') {
            (seen_slash ? digits_after : digits_before) = true;
        } else if (c == '/' && !seen_slash) {
            seen_slash = true;
        } else {
            throw ParseError("not an exact fraction: '" + s + "'");
        }
    }
    if (!digits_before || (seen_slash && !digits_after))
        throw ParseError("not an exact fraction: '" + s + "'");
    if (s[0] == '+') s.erase(0, 1);
    Rational r;
    if (r.set_str(s, 10) != 0) throw ParseError("not an exact fraction: '" + s + "'");
    if (r.get_den() == 0) throw ParseError("zero denominator in '" + s + "'");
    r.canonicalize();
    return r;
}

// Always "p/q", also for integers ("3/1"), so files are uniform.
inline std::string to_fraction(const Rational& r) {
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

inline double to_double(const Rational& r) { return r.get_d(); }

inline Integer floor(const Rational& r) {
    Integer q;
    mpz_fdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
    return q;
}

inline Integer ceil(const Rational& r) {
    Integer q;
    mpz_cdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
    return q;
}

inline Integer pow(const Integer& base, unsigned long exponent) {
    Integer out;
    mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), exponent);
    return out;
}

inline Rational pow(const Rational& base, unsigned long exponent) {
    return make_rational(pow(base.get_num(), exponent), pow(base.get_den(), exponent));
}

namespace detail {

inline void split_exponent(const Rational& beta, unsigned long& p, unsigned long& q) {
    if (beta < 0) throw DomainError("negative exponent");
    if (!beta.get_num().fits_ulong_p() || !beta.get_den().fits_ulong_p())
        throw DomainError("exponent numerator/denominator too large");
    p = beta.get_num().get_ui();
    q = beta.get_den().get_ui();
}

} // namespace detail

// floor(x^beta) for x > 0 and rational beta >= 0, exactly:
// the largest m with m^q <= x^p where beta = p/q.
inline Integer floor_pow(const Rational& x, const Rational& beta) {
    if (x <= 0) throw DomainError("floor_pow needs a positive base");
    unsigned long p = 0, q = 1;
    detail::split_exponent(beta, p, q);
    Integer num = pow(x.get_num(), p);
    Integer den = pow(x.get_den(), p);
    Integer whole;
    mpz_fdiv_q(whole.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    Integer root;
    mpz_root(root.get_mpz_t(), whole.get_mpz_t(), q);
    return root;
}

// Exact three-way comparison of x^beta against y (x, y > 0).
inline std::strong_ordering compare_pow(const Rational& x, const Rational& beta, const Rational& y) {
    if (x <= 0 || y <= 0) throw DomainError("compare_pow needs positive operands");
    unsigned long p = 0, q = 1;
    detail::split_exponent(beta, p, q);
    // x^(p/q) <=> y  <=>  x^p <=> y^q
    Rational lhs = pow(x, p);
    Rational rhs = pow(y, q);
    int c = cmp(lhs, rhs);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

inline double log_of(const Integer& n) {
    if (n <= 0) throw DomainError("log of non-positive integer");
    long exp2 = 0;
    double mant = mpz_get_d_2exp(&exp2, n.get_mpz_t());
    return std::log(mant) + static_cast<double>(exp2) * std::log(2.0);
}

inline double log_of(const Rational& r) {
    if (r <= 0) throw DomainError("log of non-positive rational");
    return log_of(Integer(r.get_num())) - log_of(Integer(r.get_den()));
}

// 12 significant digits, the report precision.
inline std::string to_decimal(double v, int digits = 12) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// Closed interval [lo, hi] with exact endpoints; lo == hi is a point.
struct Interval {
    Rational lo;
    Rational hi;

    Rational length() const { return hi - lo; }
    Rational midpoint() const { return (lo + hi) / 2; }
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
    bool contains(const Interval& other) const { return lo <= other.lo && other.hi <= hi; }
    bool degenerate() const { return lo == hi; }

    friend bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }
};

inline Interval make_interval(const Rational& lo, const Rational& hi) {
    if (hi < lo) throw DomainError("interval with hi < lo: [" + to_fraction(lo) + ", " + to_fraction(hi) + "]");
    return Interval{lo, hi};
}

// Gap between two intervals (0 if they meet).
inline Rational interval_gap(const Interval& a, const Interval& b) {
    if (a.hi < b.lo) return b.lo - a.hi;
    if (b.hi < a.lo) return a.lo - b.hi;
    return 0;
}

// Hausdorff distance between two closed intervals.
inline Rational hausdorff(const Interval& a, const Interval& b) {
    Rational d1 = abs(a.lo - b.lo);
    Rational d2 = abs(a.hi - b.hi);
    return d1 > d2 ? d1 : d2;
}

// "lo,hi" as two exact fractions.
inline Interval parse_interval(std::string_view text) {
    auto comma = text.find(',');
    if (comma == std::string_view::npos) throw ParseError("interval must be 'lo,hi': " + std::string(text));
    Rational lo = parse_rational(text.substr(0, comma));
    Rational hi = parse_rational(text.substr(comma + 1));
    if (hi < lo) throw ParseError("interval with hi < lo: " + std::string(text));
    return Interval{lo, hi};
}

inline std::string to_string(const Interval& i) {
    return "[" + to_fraction(i.lo) + ", " + to_fraction(i.hi) + "]";
}

inline std::ostream& operator<<(std::ostream& os, const Interval& i) { return os << to_string(i); }

} // namespace mmdlab
