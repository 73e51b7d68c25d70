#pragma once

// The Bruhat-Tits building of SL3 over Q with the p-adic valuation: vertices
// are homothety classes of rank-3 Z_(p)-lattices in canonical Hermite form,
// chambers at infinity are full flags (line in plane) with primitive integer
// representatives, and the residue building at the standard vertex is the
// flag variety over F_p.
//
// Sign convention, fixed once: theta(x,y) = the dominance-sorted negated
// Smith valuations of the basis change from x to y, normalized to sum zero.
// It is pinned by the test diag(1/p,1,p)*o |-> (1,0,-1).

#include <array>
#include <optional>
#include <vector>

#include "a2walk/decompositions.hpp"
#include "a2walk/errors.hpp"
#include "a2walk/matrix.hpp"
#include "a2walk/numeric.hpp"
#include "a2walk/weyl.hpp"

namespace a2walk {

// Primitive integer representative of a rational direction: denominators
// cleared, full gcd divided out, first nonzero entry positive.
inline std::array<Int, 3> canonical_primitive(const std::array<Rat, 3>& v) {
    Int l = 1;
    for (const auto& q : v) l = lcm(l, denominator(q));
    std::array<Int, 3> w;
    Int g = 0;
    for (int i = 0; i < 3; ++i) {
        w[i] = numerator(v[i] * Rat(l));
        g = gcd(g, w[i]);
    }
    if (g == 0) fail(errc::invalid_argument, "no direction from the zero vector");
    int lead = 0;
    while (w[lead] == 0) ++lead;
    if (w[lead] < 0) g = -g;
    for (auto& x : w) x /= g;
    return w;
}

inline std::array<Rat, 3> to_rat(const std::array<Int, 3>& v) {
    return {Rat(v[0]), Rat(v[1]), Rat(v[2])};
}

inline std::array<Int, 3> cross(const std::array<Int, 3>& a, const std::array<Int, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline Int dot(const std::array<Int, 3>& a, const std::array<Int, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// A full flag line-in-plane: a chamber at infinity. The plane is stored as a
// primitive integer covector; incidence plane . line = 0 holds exactly.
struct Flag {
    std::array<Int, 3> line;
    std::array<Int, 3> plane;

    static Flag make(const std::array<Rat, 3>& line_dir, const std::array<Rat, 3>& plane_cov) {
        Flag f{canonical_primitive(line_dir), canonical_primitive(plane_cov)};
        if (dot(f.line, f.plane) != 0)
            fail(errc::invalid_argument, "flag incidence violated");
        return f;
    }

    static Flag standard() {
        return Flag{{Int(1), Int(0), Int(0)}, {Int(0), Int(0), Int(1)}};
    }

    // The opposite coordinate flag (e3, <e2,e3>).
    static Flag standard_opposite() {
        return Flag{{Int(0), Int(0), Int(1)}, {Int(1), Int(0), Int(0)}};
    }

    bool operator==(const Flag&) const = default;
};

// g.F: the line maps by g, the plane covector by the adjugate (projectively
// the inverse transpose).
inline Flag transform_flag(const Mat3& g, const Flag& f) {
    Mat3 adj = adjugate(g);
    if (det(g) == 0) fail(errc::singular_matrix, "flag transform by singular matrix");
    return Flag::make(g.apply(to_rat(f.line)), adj.transpose().apply(to_rat(f.plane)));
}

// Vertex of the building: canonical Hermite form of a lattice class.
struct BuildingVertex {
    Mat3 canon;

    static BuildingVertex standard() { return {Mat3::identity()}; }
    static BuildingVertex from_basis(const Mat3& basis, long p) {
        return {hermite_canonical(basis, p)};
    }

    bool operator==(const BuildingVertex&) const = default;
};

// The isometric action of det-1 elements; result re-canonicalized.
inline BuildingVertex act(const Mat3& g, const BuildingVertex& x, long p) {
    if (det(g) != 1) fail(errc::not_in_group, "act: determinant must be 1");
    return BuildingVertex::from_basis(g * x.canon, p);
}

// Sum-zero apartment coordinate from raw filtration exponents: negate and
// project out the homothety direction.
inline std::array<Rat, 3> negate_and_center(const std::array<long, 3>& v) {
    Rat mean = Rat(-(v[0] + v[1] + v[2]), 3);
    return {Rat(-v[0]) - mean, Rat(-v[1]) - mean, Rat(-v[2]) - mean};
}

inline TypeVector cartan_type_of_matrix(const Mat3& rel, long p) {
    auto v = smith_valuations_by_minors(rel, p);
    auto c = negate_and_center(v);
    // Valuations come out increasing, so the negated triple is dominant.
    return TypeVector{{c[0], c[1], c[2]}};
}

inline TypeVector cartan_type(const BuildingVertex& x, const BuildingVertex& y, long p) {
    if (x == y) return TypeVector{};
    return cartan_type_of_matrix(inverse(x.canon) * y.canon, p);
}

inline Rat distance_sq(const BuildingVertex& x, const BuildingVertex& y, long p) {
    return cartan_type(x, y, p).norm_sq();
}

// Attracting flag of a group element with regular Cartan type: built from the
// Smith U-factor with valuations increasing. Unique when the type is regular;
// which wall fails is reported otherwise.
inline Flag cartan_flag(const Mat3& g, long p,
                        PivotOrder ties = PivotOrder::RowMajor) {
    auto s = smith_decompose(g, p, ties);
    if (s.valuations[0] == s.valuations[1] || s.valuations[1] == s.valuations[2]) {
        std::string wall = s.valuations[0] == s.valuations[1]
                               ? "line ambiguous (v1 = v2)"
                               : "plane ambiguous (v2 = v3)";
        fail(errc::non_regular_type, "cartan_flag: " + wall);
    }
    auto c0 = s.U.col(0), c1 = s.U.col(1);
    std::array<Int, 3> u0 = canonical_primitive(c0);
    std::array<Int, 3> u1 = canonical_primitive(c1);
    return Flag{u0, canonical_primitive(to_rat(cross(u0, u1)))};
}

inline bool type_is_regular(const Mat3& rel, long p) {
    auto v = smith_valuations_by_minors(rel, p);
    return v[0] < v[1] && v[1] < v[2];
}

// Gap exponent m with delta(F,F') = p^{-m}: the least valuation among the
// 2x2 minors of the paired line representatives and of the paired plane
// covectors. nullopt means equal flags (distance zero).
inline std::optional<long> flag_gap_exponent(const Flag& f, const Flag& g, long p) {
    auto part = [&](const std::array<Int, 3>& a, const std::array<Int, 3>& b) -> Val {
        Val m;
        for (int i = 0; i < 3; ++i) {
            int j = (i + 1) % 3;
            Int minor = a[i] * b[j] - a[j] * b[i];
            if (minor != 0) m = val_min(m, Val(int_valuation(minor, p)));
        }
        return m;
    };
    Val gap = val_min(part(f.line, g.line), part(f.plane, g.plane));
    if (!gap) return std::nullopt;
    return *gap;
}

inline Rat flag_distance(const Flag& f, const Flag& g, long p) {
    auto m = flag_gap_exponent(f, g, p);
    if (!m) return Rat(0);
    return pow_rat(p, -*m);
}

// Relative position of two flags as a Weyl group element, from the
// intersection-dimension jump table; gallery length = Coxeter length,
// opposition = length 3.
inline WeylElement weyl_distance(const Flag& f, const Flag& g) {
    // Representatives are canonical, so projective equality is array equality.
    const bool same_line = f.line == g.line;
    const bool same_plane = f.plane == g.plane;
    const bool line_in_plane2 = dot(f.line, g.plane) == 0;
    const bool line2_in_plane = dot(g.line, f.plane) == 0;

    int r[4][4] = {};
    for (int i = 1; i <= 3; ++i) r[i][3] = i, r[3][i] = i;
    r[1][1] = same_line ? 1 : 0;
    r[1][2] = line_in_plane2 ? 1 : 0;
    r[2][1] = line2_in_plane ? 1 : 0;
    r[2][2] = same_plane ? 2 : 1;
    r[3][3] = 3;

    WeylElement w;
    for (int j = 1; j <= 3; ++j)
        for (int i = 1; i <= 3; ++i)
            if (r[i][j] - r[i - 1][j] - r[i][j - 1] + r[i - 1][j - 1] == 1) w.perm[j - 1] = i - 1;
    return w;
}

inline bool opposite(const Flag& f, const Flag& g) { return weyl_distance(f, g).length() == 3; }

// p-unimodular basis adapted to a flag: columns (line, in-plane, completion)
// with the standard flag mapping to the given one. Obtained from any rational
// adapted basis by stripping its Iwasawa upper-triangular part.
inline Mat3 adapted_unimodular_basis(const Flag& c, long p) {
    std::array<Int, 3> c2 = cross(c.plane, c.line);
    Mat3 h;
    for (int i = 0; i < 3; ++i) {
        h.a[i][0] = Rat(c.line[i]);
        h.a[i][1] = Rat(c2[i]);
    }
    for (int k = 0; k < 3; ++k) {
        h.a[0][2] = k == 0 ? 1 : 0;
        h.a[1][2] = k == 1 ? 1 : 0;
        h.a[2][2] = k == 2 ? 1 : 0;
        if (det(h) != 0) break;
    }
    return iwasawa_decompose(h, p).K;
}

// Iwasawa filtration exponents by the column-minor route (no factor build);
// matches the K diag(p^b) N decomposition of iwasawa_decompose.
inline std::array<long, 3> iwasawa_valuations(const Mat3& m, long p) {
    Rat d = det(m);
    if (d == 0) fail(errc::singular_matrix, "iwasawa valuations of singular matrix");
    Val b0;
    for (int i = 0; i < 3; ++i) b0 = val_min(b0, valuation(m.a[i][0], p));
    Val b01;
    for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3;
        Rat minor = m.a[i][0] * m.a[j][1] - m.a[j][0] * m.a[i][1];
        b01 = val_min(b01, valuation(minor, p));
    }
    long vdet = valuation_nonzero(d, p);
    return {*b0, *b01 - *b0, vdet - *b01};
}

// Exponents of the dual factorization M = N diag(p^b) K with N upper-triangular
// unipotent on the left and K p-unimodular on the right: the row filtration,
// read from the bottom. Unlike the column triple this one is invariant under
// right p-unimodular factors, hence a function of the lattice M Z_(p)^3.
inline std::array<long, 3> iwasawa_valuations_row(const Mat3& m, long p) {
    Rat d = det(m);
    if (d == 0) fail(errc::singular_matrix, "iwasawa valuations of singular matrix");
    Val b2;
    for (int j = 0; j < 3; ++j) b2 = val_min(b2, valuation(m.a[2][j], p));
    Val b12;
    for (int j = 0; j < 3; ++j) {
        int k = (j + 1) % 3;
        Rat minor = m.a[1][j] * m.a[2][k] - m.a[1][k] * m.a[2][j];
        b12 = val_min(b12, valuation(minor, p));
    }
    long vdet = valuation_nonzero(d, p);
    return {vdet - *b12, *b12 - *b2, *b2};
}

// Apartment coordinate of y for the sector-based retraction at (x, C):
// conjugate C to the standard flag by an adapted p-unimodular basis in x's
// coordinates, then read the unipotent-on-the-left Iwasawa exponents of the
// relative matrix (the lattice-invariant triple).
inline std::array<Rat, 3> retraction_coordinate(const BuildingVertex& x, const Flag& c,
                                                const BuildingVertex& y, long p) {
    Mat3 xinv = inverse(x.canon);
    Flag cx = transform_flag(xinv, c);
    Mat3 h = adapted_unimodular_basis(cx, p);
    Mat3 rel = inverse(h) * (xinv * y.canon);
    return negate_and_center(iwasawa_valuations_row(rel, p));
}

// y lies in the sector Q(x, C) iff the retraction coordinate agrees with the
// (dominant) Cartan type.
inline bool sector_membership(const BuildingVertex& x, const Flag& c, const BuildingVertex& y,
                              long p) {
    return retraction_coordinate(x, c, y, p) == cartan_type(x, y, p).coords;
}

// Chamber of the residue building at the standard vertex: a flag over F_p,
// stored with first nonzero coordinate normalized to 1.
struct GermChamber {
    std::array<long, 3> line;
    std::array<long, 3> plane;

    bool operator==(const GermChamber&) const = default;
};

namespace detail {

inline std::array<long, 3> reduce_mod_p(const std::array<Int, 3>& v, long p) {
    std::array<long, 3> r{};
    for (int i = 0; i < 3; ++i) {
        Int m = v[i] % p;
        if (m < 0) m += p;
        r[i] = static_cast<long>(m);
    }
    int lead = 0;
    while (lead < 3 && r[lead] == 0) ++lead;
    if (lead == 3) fail(errc::invalid_argument, "vector vanishes mod p; representative not primitive");
    Int inv;
    Int a = r[lead], pp = p;
    if (mpz_invert(inv.backend().data(), a.backend().data(), pp.backend().data()) == 0)
        fail(errc::invalid_argument, "no inverse mod p");
    long il = static_cast<long>(inv);
    for (auto& x : r) x = (x * il) % p;
    return r;
}

}  // namespace detail

inline GermChamber flag_mod_p(const Flag& f, long p) {
    return GermChamber{detail::reduce_mod_p(f.line, p), detail::reduce_mod_p(f.plane, p)};
}

// Germ at x of the segment [x, y]: the mod-p attracting flag of the relative
// matrix in x's canonical basis. Requires a regular type.
inline GermChamber germ_project(const BuildingVertex& x, const BuildingVertex& y, long p) {
    Mat3 rel = inverse(x.canon) * y.canon;
    return flag_mod_p(cartan_flag(rel, p), p);
}

}  // namespace a2walk
