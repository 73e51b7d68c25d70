#include <doctest.h>

#include "a2walk/experiments.hpp"
#include "a2walk/walk.hpp"

using namespace a2walk;

namespace {
const long P = 3;
}

TEST_CASE("measure construction") {
    Mat3 g = diag3(Rat(1, P), 1, Rat(P));
    MeasureSpec spec = MeasureSpec::make({{g, Rat(1)}}, false, P, 1);
    CHECK(spec.atoms.size() == 1);
    CHECK(spec.atoms[0].weight == 1);
    CHECK(spec.atoms[0].step_type == TypeVector{{Rat(1), Rat(0), Rat(-1)}});

    MeasureSpec sym = MeasureSpec::make({{g, Rat(3)}}, true, P, 1);
    CHECK(sym.atoms.size() == 2);
    CHECK(sym.atoms[0].weight == Rat(1, 2));
    CHECK(sym.atoms[1].weight == Rat(1, 2));
    CHECK(sym.atoms[1].g == adjugate(g));

    CHECK_THROWS_AS(MeasureSpec::make({}, false, P, 1), error);
    CHECK_THROWS_AS(MeasureSpec::make({{diag3(2, 1, 1), Rat(1)}}, false, P, 1), error);
    CHECK_THROWS_AS(MeasureSpec::make({{g, Rat(0)}}, false, P, 1), error);
}

TEST_CASE("symmetrized spec is inverse-closed with matched weights") {
    MeasureSpec spec = fixture_zariski_dense(P, 9);
    REQUIRE(spec.atoms.size() == 4);
    for (const auto& atom : spec.atoms) {
        bool has_inverse = false;
        for (const auto& other : spec.atoms)
            if (other.g == adjugate(atom.g) && other.weight == atom.weight) has_inverse = true;
        CHECK(has_inverse);
    }
}

TEST_CASE("dirac diagonal walk: exact records") {
    MeasureSpec spec = fixture_dirac_diag(P, 7);
    auto path = sample_path(spec, 12, 0);
    REQUIRE(path.size() == 12);
    for (const auto& rec : path) {
        long n = rec.n;
        CHECK(rec.theta == TypeVector{{Rat(n), Rat(0), Rat(-n)}});
        CHECK(rec.step_sq == 2);
        REQUIRE(rec.flag.has_value());
        CHECK(*rec.flag == Flag::standard());
        REQUIRE(rec.germ.has_value());
        CHECK(*rec.germ == flag_mod_p(Flag::standard(), P));
        CHECK(!rec.gap_exp.has_value());  // consecutive flags are equal
    }
}

TEST_CASE("identity walk: honest degenerate records") {
    Mat3 id = Mat3::identity();
    MeasureSpec spec = MeasureSpec::make({{id, Rat(1)}}, false, P, 7);
    auto path = sample_path(spec, 8, 0);
    for (const auto& rec : path) {
        CHECK(rec.theta == TypeVector{});
        CHECK(!rec.flag.has_value());
        CHECK(!rec.germ.has_value());
    }
}

TEST_CASE("determinism and the prefix property") {
    MeasureSpec spec = fixture_zariski_dense(P, 2024);
    auto a = sample_path(spec, 40, 5);
    auto b = sample_path(spec, 40, 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].vertex == b[i].vertex);
        CHECK(a[i].theta == b[i].theta);
        CHECK(a[i].flag == b[i].flag);
    }
    auto shorter = sample_path(spec, 25, 5);
    for (std::size_t i = 0; i < shorter.size(); ++i) {
        CHECK(shorter[i].vertex == a[i].vertex);
        CHECK(shorter[i].theta == a[i].theta);
    }
    // Different trajectory ids decouple.
    auto other = sample_path(spec, 40, 6);
    bool all_same = true;
    for (std::size_t i = 0; i < other.size(); ++i)
        if (!(other[i].vertex == a[i].vertex)) all_same = false;
    CHECK_FALSE(all_same);
}

TEST_CASE("theta subadditivity along a sampled path") {
    MeasureSpec spec = fixture_zariski_dense(P, 77);
    auto path = sample_path(spec, 60, 1);
    for (std::size_t i = 9; i < path.size(); i += 13) {
        for (std::size_t j = i + 7; j < path.size(); j += 17) {
            Rat a2 = path[j].theta.norm_sq();
            Rat b2 = path[i].theta.norm_sq();
            Rat c2 = distance_sq(path[i].vertex, path[j].vertex, P);
            CHECK(triangle_from_squares(a2, b2, c2));
        }
    }
}

TEST_CASE("lyapunov estimate: deterministic and degenerate fixtures") {
    SUBCASE("dirac diagonal: exact vector, zero spread") {
        EstimateReport rep = lyapunov_estimate(fixture_dirac_diag(P, 3), 30, 4);
        CHECK(rep.lambda_hat == TypeVector{{Rat(1), Rat(0), Rat(-1)}});
        CHECK(rep.stderr_mean == std::array<double, 3>{0.0, 0.0, 0.0});
        CHECK(rep.regular);
        CHECK(rep.regular_margin == std::numeric_limits<double>::infinity());
        CHECK(rep.drift_hat == doctest::Approx(std::sqrt(2.0)));
        CHECK(rep.iota_asymmetry == 0.0);
    }
    SUBCASE("reflected walk: drift shrinks with N") {
        EstimateReport shortrun = lyapunov_estimate(fixture_elementary(P, 5), 50, 12);
        EstimateReport longrun = lyapunov_estimate(fixture_elementary(P, 5), 500, 12);
        CHECK(longrun.drift_hat < shortrun.drift_hat);
        CHECK(longrun.drift_hat < 0.25);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(lyapunov_estimate(fixture_dirac_diag(P, 3), 10, 1), error);
    }
}

TEST_CASE("limit flags") {
    SUBCASE("dirac diagonal converges to the standard flag") {
        auto path = sample_path(fixture_dirac_diag(P, 1), 40, 0);
        auto res = limit_flag(path, 6, P);
        REQUIRE(res.flag.has_value());
        CHECK(*res.flag == Flag::standard());
        CHECK(!res.best_exponent.has_value());  // constant flag sequence
    }
    SUBCASE("identity walk never converges") {
        Mat3 id = Mat3::identity();
        MeasureSpec spec = MeasureSpec::make({{id, Rat(1)}}, false, P, 7);
        auto path = sample_path(spec, 40, 0);
        auto res = limit_flag(path, 1, P);
        CHECK(!res.flag.has_value());
        CHECK(!res.best_exponent.has_value());
    }
    SUBCASE("generic fixture: converged means the window gaps clear the bar") {
        MeasureSpec spec = fixture_zariski_dense(P, 11);
        const long n = 240;
        auto path = sample_path(spec, n, 2);
        auto res = limit_flag(path, 3, P);
        if (res.flag) {
            LimitFlagTracker tracker(n);
            long start = tracker.window_start();
            for (const auto& rec : path) {
                if (rec.n < start || rec.n == n) continue;
                REQUIRE(rec.flag.has_value());
                auto gap = flag_gap_exponent(*rec.flag, *res.flag, P);
                if (gap) CHECK(*gap >= 3);
            }
        }
    }
    SUBCASE("streaming and record-based trackers agree") {
        MeasureSpec spec = fixture_zariski_dense(P, 13);
        auto path = sample_path(spec, 120, 4);
        auto a = limit_flag(path, 2, P);
        auto b = run_limit_flag(spec, 120, 4, 2);
        CHECK(a.flag == b.flag);
        CHECK(a.best_exponent == b.best_exponent);
    }
}

TEST_CASE("opposition rate on degenerate input is honestly zero") {
    // Every trajectory of the Dirac walk has the same limit flag; identical
    // flags share a plane, so no pair is opposite.
    OppositionReport rep = opposition_rate(fixture_dirac_diag(P, 1), 30, 4, 3);
    CHECK(rep.pairs == 4);
    CHECK(rep.converged == 4);
    CHECK(rep.skipped == 0);
    CHECK(rep.opposite_count == 0);
    CHECK(rep.rate == 0.0);
    CHECK_THROWS_AS(opposition_rate(fixture_dirac_diag(P, 1), 30, 0, 3), error);
}

TEST_CASE("stationarity residual exact zeros") {
    SUBCASE("identity measure: convolution is the identity") {
        Mat3 id = Mat3::identity();
        MeasureSpec spec = MeasureSpec::make({{id, Rat(1)}}, false, P, 7);
        std::vector<Flag> sample{Flag::standard(), Flag::standard_opposite()};
        CHECK(stationarity_residual(spec, sample, 2) == 0);
    }
    SUBCASE("dirac diagonal fixes its attracting flag") {
        MeasureSpec spec = fixture_dirac_diag(P, 7);
        std::vector<Flag> sample{Flag::standard()};
        CHECK(stationarity_residual(spec, sample, 2) == 0);
        CHECK(stationarity_residual(spec, sample, 1) == 0);
    }
    SUBCASE("a moved flag gives a positive residual") {
        // The diagonal fixes all coordinate flags, so use a skew line.
        MeasureSpec spec = fixture_dirac_diag(P, 7);
        std::vector<Flag> sample{Flag::make({Rat(1), Rat(1), Rat(0)}, {Rat(1), Rat(-1), Rat(0)})};
        CHECK(stationarity_residual(spec, sample, 1) > 0);
    }
    SUBCASE("errors") {
        MeasureSpec spec = fixture_dirac_diag(P, 7);
        CHECK_THROWS_AS(stationarity_residual(spec, {Flag::standard()}, 0), error);
    }
}

TEST_CASE("tracking deviations") {
    MeasureSpec spec = fixture_dirac_diag(P, 1);
    auto path = sample_path(spec, 25, 0);
    SUBCASE("the walk is its own ray") {
        auto devs = tracking_deviation(path, Flag::standard(),
                                       TypeVector{{Rat(1), Rat(0), Rat(-1)}}, P);
        for (double d : devs) CHECK(d == 0.0);
    }
    SUBCASE("wrong direction stays boundedly off") {
        auto devs = tracking_deviation(path, Flag::standard(),
                                       TypeVector{{Rat(2), Rat(-1), Rat(-1)}}, P);
        for (double d : devs) CHECK(d >= 1.0);
    }
    SUBCASE("zero direction is rejected") {
        CHECK_THROWS_AS(tracking_deviation(path, Flag::standard(), TypeVector{}, P), error);
    }
}

TEST_CASE("germ stabilization") {
    SUBCASE("dirac diagonal stabilizes immediately and matches") {
        auto path = sample_path(fixture_dirac_diag(P, 1), 30, 0);
        auto limit = limit_flag(path, 4, P);
        auto stab = germ_stabilization(path, limit.flag, P);
        CHECK(stab.n0 == std::optional<long>(1));
        CHECK(stab.match);
    }
    SUBCASE("identity walk never stabilizes") {
        Mat3 id = Mat3::identity();
        MeasureSpec spec = MeasureSpec::make({{id, Rat(1)}}, false, P, 7);
        auto path = sample_path(spec, 20, 0);
        auto stab = germ_stabilization(path, std::nullopt, P);
        CHECK(!stab.n0.has_value());
        CHECK_FALSE(stab.match);
    }
}

TEST_CASE("nearest dominant integer point") {
    CHECK(nearest_dominant_integer(TypeVector{{Rat(1), Rat(0), Rat(-1)}}, 5) ==
          std::array<long, 3>{5, 0, -5});
    CHECK(nearest_dominant_integer(TypeVector{{Rat(1, 2), Rat(0), Rat(-1, 2)}}, 3) ==
          std::array<long, 3>{2, 0, -2});
    CHECK(nearest_dominant_integer(TypeVector{{Rat(2, 5), Rat(1, 5), Rat(-3, 5)}}, 1) ==
          std::array<long, 3>{0, 0, 0});
}

TEST_CASE("walk engine options: flags only from a given step") {
    MeasureSpec spec = fixture_zariski_dense(P, 21);
    std::vector<TrajectoryRecord> all, tail;
    run_walk(spec, 50, 3, 1, [&](const TrajectoryRecord& r) { all.push_back(r); });
    run_walk(spec, 50, 3, 41, [&](const TrajectoryRecord& r) { tail.push_back(r); });
    for (std::size_t i = 0; i < 40; ++i) CHECK(!tail[i].flag.has_value());
    for (std::size_t i = 40; i < 50; ++i) {
        CHECK(tail[i].flag == all[i].flag);
        CHECK(tail[i].theta == all[i].theta);
    }
}
