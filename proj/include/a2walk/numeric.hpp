#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "a2walk/errors.hpp"

namespace a2walk {

using Int = boost::multiprecision::mpz_int;
using Rat = boost::multiprecision::mpq_rational;

// p-adic valuations are small signed integers in practice; +infinity (the
// valuation of 0) is represented by std::nullopt.
using Val = std::optional<long>;

inline Int numerator(const Rat& q) { return Int(boost::multiprecision::numerator(q)); }
inline Int denominator(const Rat& q) { return Int(boost::multiprecision::denominator(q)); }

inline Int pow_int(long base, long exp) {
    Int r = 1, b = base;
    for (; exp > 0; exp >>= 1) {
        if (exp & 1) r *= b;
        b *= b;
    }
    return r;
}

// p^e as an exact rational, e of either sign.
inline Rat pow_rat(long p, long e) {
    Int pe = pow_int(p, e >= 0 ? e : -e);
    return e >= 0 ? Rat(pe) : Rat(1, pe);
}

// Multiplicity of p in a nonzero integer, via mpz_remove.
inline long int_valuation(const Int& n, long p) {
    if (n == 0) fail(errc::zero_vector, "valuation of zero integer");
    Int q, pp = p;
    return static_cast<long>(mpz_remove(q.backend().data(), n.backend().data(), pp.backend().data()));
}

// Exact p-adic valuation of a rational; 0 maps to +infinity (nullopt).
inline Val valuation(const Rat& q, long p) {
    if (q == 0) return std::nullopt;
    return int_valuation(numerator(q), p) - int_valuation(denominator(q), p);
}

// Valuation of a known-nonzero rational.
inline long valuation_nonzero(const Rat& q, long p) {
    Val v = valuation(q, p);
    if (!v) fail(errc::zero_vector, "unexpected zero in valuation_nonzero");
    return *v;
}

inline Val val_min(Val a, Val b) {
    if (!a) return b;
    if (!b) return a;
    return std::min(*a, *b);
}

inline bool is_p_integral(const Rat& q, long p) {
    Val v = valuation(q, p);
    return !v || *v >= 0;
}

inline bool is_p_unit(const Rat& q, long p) {
    Val v = valuation(q, p);
    return v && *v == 0;
}

// Strips all factors of p: q = u * p^v with u a p-unit; returns u.
inline Rat unit_part(const Rat& q, long p) {
    Val v = valuation(q, p);
    if (!v) fail(errc::zero_vector, "unit part of zero");
    return Rat(q) / pow_rat(p, *v);
}

// The unique integer t in [0, p^k) congruent to q modulo p^k Z_(p).
// Requires q p-integral and k >= 0.
inline Int mod_p_power(const Rat& q, long p, long k) {
    Int pk = pow_int(p, k);
    Int num = numerator(q), den = denominator(q);
    Int dinv;
    if (mpz_invert(dinv.backend().data(), den.backend().data(), pk.backend().data()) == 0)
        fail(errc::invalid_argument, "denominator not invertible mod p^k");
    Int t = (num % pk) * dinv % pk;
    if (t < 0) t += pk;
    return t;
}

inline std::string to_string(const Int& n) { return n.str(); }
inline std::string to_string(const Rat& q) { return q.str(); }

inline Rat rat_from_string(const std::string& s) {
    try {
        Rat q(s);
        return q;
    } catch (const std::exception&) {
        fail(errc::config_error, "cannot parse rational: " + s);
    }
}

}  // namespace a2walk
