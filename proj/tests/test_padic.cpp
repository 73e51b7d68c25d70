#include <doctest.h>

#include "a2walk/decompositions.hpp"
#include "a2walk/rng.hpp"
#include "a2walk/sampling.hpp"

using namespace a2walk;

TEST_CASE("p-adic valuation") {
    CHECK(valuation(Rat(6, 5), 3) == Val(1));
    CHECK(valuation(Rat(1, 25), 5) == Val(-2));
    CHECK(valuation(Rat(0), 7) == std::nullopt);
    CHECK(valuation(Rat(-18), 3) == Val(2));

    // Multiplicativity and the ultrametric bound.
    PhiloxStream rng(5, 0);
    for (int i = 0; i < 200; ++i) {
        Rat a = sparse_entry(rng, 3), b = sparse_entry(rng, 3);
        Val va = valuation(a, 3), vb = valuation(b, 3);
        if (va && vb) CHECK(valuation(a * b, 3) == Val(*va + *vb));
        Val vs = valuation(a + b, 3);
        Val lower = val_min(va, vb);
        if (vs && lower) CHECK(*vs >= *lower);
    }
}

TEST_CASE("mod p^k representative") {
    CHECK(mod_p_power(Rat(7), 3, 2) == 7);
    CHECK(mod_p_power(Rat(1, 2), 3, 2) == 5);  // 2*5 = 10 = 1 mod 9
    CHECK(mod_p_power(Rat(-1), 3, 1) == 2);
}

TEST_CASE("smith decomposition: pinned examples") {
    const long p = 5;
    SUBCASE("already diagonal") {
        Mat3 m = diag3(Rat(1, p), 1, Rat(p));
        auto s = smith_decompose(m, p);
        CHECK(s.valuations == std::array<long, 3>{-1, 0, 1});
        CHECK(s.U == Mat3::identity());
        CHECK(s.V == Mat3::identity());
    }
    SUBCASE("p-unimodular input") {
        Mat3 m = mat3({{1, 1, 0}, {0, 1, 0}, {Rat(p), 0, 1}});
        auto s = smith_decompose(m, p);
        CHECK(s.valuations == std::array<long, 3>{0, 0, 0});
    }
    SUBCASE("minor-gcd oracle case") {
        Mat3 m = mat3({{Rat(1, p), 1, 0}, {0, 1, 0}, {0, 0, Rat(p)}});
        // Oracle: min entry valuation -1, min 2x2 minor valuation -1, det valuation 0.
        CHECK(smith_valuations_by_minors(m, p) == std::array<long, 3>{-1, 0, 1});
        auto s = smith_decompose(m, p);
        CHECK(s.valuations == std::array<long, 3>{-1, 0, 1});
        CHECK(s.U * smith_diagonal(s, p) * s.V == m);
    }
    SUBCASE("singular input") {
        Mat3 z;
        CHECK_THROWS_AS(smith_decompose(z, p), error);
    }
}

TEST_CASE("smith decomposition vs minor oracle on sparse random matrices") {
    const long p = 3;
    PhiloxStream rng(101, 1);
    for (int i = 0; i < 300; ++i) {
        Mat3 m = random_nonsingular<3>(rng, p);
        auto s = smith_decompose(m, p);
        CHECK(s.valuations[0] <= s.valuations[1]);
        CHECK(s.valuations[1] <= s.valuations[2]);
        CHECK(s.U * smith_diagonal(s, p) * s.V == m);
        CHECK(is_p_unimodular(s.U, p));
        CHECK(is_p_unimodular(s.V, p));
        CHECK(s.valuations == smith_valuations_by_minors(m, p));
        // Pivot tie-breaking does not change the valuations.
        CHECK(smith_decompose(m, p, PivotOrder::ColMajor).valuations == s.valuations);
    }
}

TEST_CASE("iwasawa decomposition: pinned examples") {
    const long p = 7;
    SUBCASE("diagonal") {
        Mat3 m = diag3(pow_rat(p, 2), pow_rat(p, -1), 1);
        auto d = iwasawa_decompose(m, p);
        CHECK(d.b == std::array<long, 3>{2, -1, 0});
        CHECK(d.N == Mat3::identity());
    }
    SUBCASE("p-integral upper unipotent") {
        Mat3 m = mat3({{1, Rat(p), 3}, {0, 1, 1}, {0, 0, 1}});
        auto d = iwasawa_decompose(m, p);
        CHECK(d.b == std::array<long, 3>{0, 0, 0});
    }
    SUBCASE("lower unipotent with a pole") {
        Mat3 m = mat3({{1, 0, 0}, {Rat(1, p), 1, 0}, {0, 0, 1}});
        auto d = iwasawa_decompose(m, p);
        CHECK(d.b == std::array<long, 3>{-1, 1, 0});
        Mat3 dd = diag3(pow_rat(p, d.b[0]), pow_rat(p, d.b[1]), pow_rat(p, d.b[2]));
        CHECK(d.K * dd * d.N == m);
        CHECK(is_p_unimodular(d.K, p));
    }
}

namespace {

// b majorized by v (same sum, descending partial sums dominated) iff b lies in
// the convex hull of the Weyl orbit of v.
bool in_convex_hull_of_orbit(std::array<long, 3> b, std::array<long, 3> v) {
    std::sort(b.begin(), b.end(), std::greater<long>());
    std::sort(v.begin(), v.end(), std::greater<long>());
    if (b[0] + b[1] + b[2] != v[0] + v[1] + v[2]) return false;
    return b[0] <= v[0] && b[0] + b[1] <= v[0] + v[1];
}

}  // namespace

TEST_CASE("iwasawa triple refines the cartan valuations") {
    const long p = 3;
    PhiloxStream rng(202, 2);
    for (int i = 0; i < 200; ++i) {
        Mat3 m = random_nonsingular<3>(rng, p);
        auto d = iwasawa_decompose(m, p);
        Mat3 dd = diag3(pow_rat(p, d.b[0]), pow_rat(p, d.b[1]), pow_rat(p, d.b[2]));
        CHECK(d.K * dd * d.N == m);
        CHECK(is_p_unimodular(d.K, p));
        // Upper unipotent with unit diagonal.
        CHECK(d.N.a[0][0] == 1);
        CHECK(d.N.a[1][1] == 1);
        CHECK(d.N.a[2][2] == 1);
        CHECK(d.N.a[1][0] == 0);
        CHECK(d.N.a[2][0] == 0);
        CHECK(d.N.a[2][1] == 0);
        auto v = smith_valuations_by_minors(m, p);
        CHECK(in_convex_hull_of_orbit(d.b, v));
    }
}

TEST_CASE("hermite canonical form: pinned examples") {
    const long p = 5;
    CHECK(hermite_canonical(Mat3::identity(), p) == Mat3::identity());
    CHECK(hermite_canonical(diag3(Rat(p), Rat(p), Rat(p)), p) == Mat3::identity());

    SUBCASE("diag(1/p,1,p) up to change of basis") {
        Mat3 base = diag3(Rat(1, p), 1, Rat(p));
        Mat3 expect = hermite_canonical(base, p);
        CHECK(expect == diag3(1, Rat(p), Rat(p) * p));
        PhiloxStream rng(303, 3);
        for (int i = 0; i < 50; ++i) {
            Mat3 u = random_p_unimodular<3>(rng, p);
            CHECK(hermite_canonical(base * u, p) == expect);
        }
    }
    SUBCASE("errors") {
        Mat3 z;
        CHECK_THROWS_AS(hermite_canonical(z, p), error);
    }
}

TEST_CASE("hermite canonical form: invariances and shape") {
    const long p = 3;
    PhiloxStream rng(404, 4);
    for (int i = 0; i < 150; ++i) {
        Mat3 m = random_nonsingular<3>(rng, p);
        Mat3 h = hermite_canonical(m, p);
        // Idempotent, homothety-invariant, basis-invariant.
        CHECK(hermite_canonical(h, p) == h);
        CHECK(hermite_canonical(Rat(p) * m, p) == h);
        CHECK(hermite_canonical(Rat(1, p) * m, p) == h);
        Mat3 u = random_p_unimodular<3>(rng, p);
        CHECK(hermite_canonical(m * u, p) == h);
        // Shape: lower triangular, p-power diagonal, reduced integer entries.
        for (int r = 0; r < 3; ++r)
            for (int c = r + 1; c < 3; ++c) CHECK(h.a[r][c] == 0);
        for (int r = 0; r < 3; ++r) {
            long e = valuation_nonzero(h.a[r][r], p);
            CHECK(h.a[r][r] == pow_rat(p, e));
            for (int c = 0; c < r; ++c) {
                CHECK(denominator(h.a[r][c]) == 1);
                CHECK(h.a[r][c] >= 0);
                CHECK(h.a[r][c] < h.a[r][r]);
            }
        }
    }
}

TEST_CASE("hermite from generating sets (rank 2)") {
    const long p = 3;
    // (p,p) is already in Z(1,0) + Z(0,p), so the lattice is diag(1,p).
    std::vector<std::array<Rat, 2>> gens{{Rat(1), Rat(0)}, {Rat(0), Rat(p)}, {Rat(p), Rat(p)}};
    Mat2 expect = hermite_canonical(mat2({{1, 0}, {0, Rat(p)}}), p);
    CHECK(hermite_canonical_from_generators<2>(gens, p) == expect);

    std::vector<std::array<Rat, 2>> degenerate{{Rat(1), Rat(1)}, {Rat(2), Rat(2)}};
    CHECK_THROWS_AS(hermite_canonical_from_generators<2>(degenerate, p), error);
}

TEST_CASE("2x2 smith matches the minor identity") {
    const long p = 3;
    PhiloxStream rng(505, 5);
    for (int i = 0; i < 200; ++i) {
        Mat2 m = random_nonsingular<2>(rng, p);
        auto s = smith_decompose(m, p);
        CHECK(s.U * smith_diagonal(s, p) * s.V == m);
        std::array<long, 2> vals{s.valuations[0], s.valuations[1]};
        CHECK(vals == smith_valuations_by_minors(m, p));
    }
}
