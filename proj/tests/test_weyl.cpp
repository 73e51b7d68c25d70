#include <doctest.h>

#include "a2walk/rng.hpp"
#include "a2walk/weyl.hpp"

using namespace a2walk;

namespace {

std::array<Rat, 3> random_sum_zero(PhiloxStream& rng) {
    long a = static_cast<long>(rng.next_below(21)) - 10;
    long b = static_cast<long>(rng.next_below(21)) - 10;
    return {Rat(a), Rat(b), Rat(-a - b)};
}

}  // namespace

TEST_CASE("dominance projection sorts into the dominant cone") {
    CHECK(dominance_project({Rat(0), Rat(0), Rat(0)}) == TypeVector{});
    CHECK(dominance_project({Rat(-1), Rat(0), Rat(1)}) ==
          TypeVector{{Rat(1), Rat(0), Rat(-1)}});
    CHECK(dominance_project({Rat(1), Rat(-2), Rat(1)}) ==
          TypeVector{{Rat(1), Rat(1), Rat(-2)}});
    CHECK_THROWS_AS(dominance_project({Rat(1), Rat(0), Rat(0)}), error);
}

TEST_CASE("dominance projection is idempotent and Weyl invariant") {
    PhiloxStream rng(2024, 0);
    for (int i = 0; i < 200; ++i) {
        auto v = random_sum_zero(rng);
        TypeVector t = dominance_project(v);
        CHECK(t.coords[0] >= t.coords[1]);
        CHECK(t.coords[1] >= t.coords[2]);
        CHECK(dominance_project(t.coords) == t);
        for (const auto& w : all_weyl_elements())
            CHECK(dominance_project(w.apply(v)) == t);
        auto [tt, witness] = dominance_project_with_witness(v);
        CHECK(witness.apply(v) == tt.coords);
    }
}

TEST_CASE("root pairings and regularity") {
    auto r = root_pairings(TypeVector{{Rat(1), Rat(0), Rat(-1)}});
    CHECK(r.a1 == 1);
    CHECK(r.a2 == 1);
    CHECK(r.regular);

    r = root_pairings(TypeVector{{Rat(1), Rat(1), Rat(-2)}});
    CHECK(r.a1 == 0);
    CHECK(r.a2 == 3);
    CHECK_FALSE(r.regular);

    r = root_pairings(TypeVector{});
    CHECK(r.a1 == 0);
    CHECK(r.a2 == 0);
    CHECK_FALSE(r.regular);
}

TEST_CASE("opposition involution") {
    // Enumerating S3 shows the rho-direction is the fixed ray.
    TypeVector rho{{Rat(1), Rat(0), Rat(-1)}};
    CHECK(opposition_involution(rho) == rho);
    CHECK(opposition_involution(TypeVector{{Rat(2), Rat(-1), Rat(-1)}}) ==
          TypeVector{{Rat(1), Rat(1), Rat(-2)}});
    CHECK(opposition_involution(TypeVector{}) == TypeVector{});

    PhiloxStream rng(7, 1);
    for (int i = 0; i < 100; ++i) {
        TypeVector t = dominance_project(random_sum_zero(rng));
        TypeVector it = opposition_involution(t);
        CHECK(opposition_involution(it) == t);
        CHECK(it.norm_sq() == t.norm_sq());
        CHECK(root_pairings(it).regular == root_pairings(t).regular);
    }
}

TEST_CASE("weyl group structure") {
    auto ws = all_weyl_elements();
    CHECK(ws.size() == 6);
    CHECK(WeylElement::longest().length() == 3);
    CHECK(WeylElement::identity().length() == 0);
    for (const auto& w : ws) {
        CHECK((w * w.inverse()) == WeylElement::identity());
        CHECK(w.inverse().length() == w.length());
    }
}

TEST_CASE("separation constant: chord ratio") {
    // (1,0,-1): all five nontrivial permutations give chord^2 >= 2, attained
    // by the two transpositions fixing the middle slot; ||lambda||^2 = 2.
    CHECK(separation_constant_sq(TypeVector{{Rat(1), Rat(0), Rat(-1)}}) == 1);
    CHECK(separation_constant(TypeVector{{Rat(1), Rat(0), Rat(-1)}}) == doctest::Approx(1.0));
    // On a wall the constant degenerates.
    CHECK(separation_constant_sq(TypeVector{{Rat(1), Rat(1), Rat(-2)}}) == 0);
    // Scale invariance.
    CHECK(separation_constant_sq(TypeVector{{Rat(2), Rat(0), Rat(-2)}}) == 1);
    CHECK_THROWS_AS(separation_constant_sq(TypeVector{}), error);

    PhiloxStream rng(11, 2);
    for (int i = 0; i < 100; ++i) {
        auto v = random_sum_zero(rng);
        if (v[0] == 0 && v[1] == 0) continue;
        TypeVector t = dominance_project(v);
        Rat s = separation_constant_sq(t);
        for (long c : {2L, 3L, 7L})
            CHECK(separation_constant_sq(TypeVector{
                      {t.coords[0] * c, t.coords[1] * c, t.coords[2] * c}}) == s);
        CHECK((s == 0) == !root_pairings(t).regular);
    }
}

TEST_CASE("separation constant: displayed plain-sine variant degenerates") {
    // At angle pi (the longest element) the plain sine vanishes even on a
    // regular direction, which is why the chord ratio is the default.
    TypeVector rho{{Rat(1), Rat(0), Rat(-1)}};
    CHECK(separation_constant(rho, SeparationFormula::PlainSine) == doctest::Approx(0.0));
}

TEST_CASE("regularity diagnostics") {
    SUBCASE("exact ray") {
        std::vector<TypeVector> types;
        std::vector<double> steps;
        for (long n = 1; n <= 50; ++n) {
            types.push_back(TypeVector{{Rat(n), Rat(0), Rat(-n)}});
            steps.push_back(std::sqrt(2.0));
        }
        auto rep = regularity_diagnostics(types, steps);
        CHECK(rep.lambda_hat == TypeVector{{Rat(1), Rat(0), Rat(-1)}});
        for (double r : rep.direction_residuals) CHECK(r == 0.0);
        CHECK(rep.max_step_ratio > 0.0);
    }
    SUBCASE("sqrt drift decays like n^{-1/2}") {
        std::vector<TypeVector> types;
        std::vector<double> steps;
        const long n_max = 400;
        for (long n = 1; n <= n_max; ++n) {
            long s = static_cast<long>(std::floor(std::sqrt(static_cast<double>(n))));
            types.push_back(TypeVector{{Rat(n + s), Rat(0), Rat(-n - s)}});
            steps.push_back(1.0);
        }
        auto rep = regularity_diagnostics(types, steps);
        // Residuals trend to zero and are O(n^{-1/2}) up to the terminal bias.
        CHECK(rep.direction_residuals[n_max - 1] == 0.0);
        CHECK(rep.direction_residuals[9] < 3.0 / std::sqrt(10.0));
        CHECK(rep.direction_residuals[99] < 3.0 / std::sqrt(100.0));
    }
    SUBCASE("single sample") {
        auto rep = regularity_diagnostics({TypeVector{{Rat(1), Rat(0), Rat(-1)}}}, {});
        CHECK(rep.lambda_hat == TypeVector{{Rat(1), Rat(0), Rat(-1)}});
        CHECK(rep.direction_residuals == std::vector<double>{0.0});
    }
    SUBCASE("empty input") {
        CHECK_THROWS_AS(regularity_diagnostics({}, {}), error);
    }
}
