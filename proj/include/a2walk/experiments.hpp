#pragma once

// Experiment orchestration behind the CLI: config parsing, deterministic
// fan-out of trajectories to workers, and artifact emission. Aggregation is
// always by trajectory id, so output bytes do not depend on the worker count.

#include <atomic>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "a2walk/io.hpp"
#include "a2walk/panel_tree.hpp"
#include "a2walk/sampling.hpp"
#include "a2walk/walk.hpp"

namespace a2walk {

inline bool is_prime(long n) {
    if (n < 2) return false;
    for (long d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

struct ExperimentConfig {
    long prime = 3;
    std::string rng_family = kRngFamily;
    std::uint64_t seed = 0;
    std::vector<std::pair<Mat3, Rat>> atoms;
    bool symmetrize = false;
    long steps = 100;
    long trajectories = 10;
    long tol_exponent = 5;
    long germ_depth = 2;
    int workers = 1;
    std::string out_dir;  // optional; the CLI flag takes precedence

    static ExperimentConfig from_json(const json& j) {
        ExperimentConfig cfg;
        try {
            cfg.prime = j.at("prime").get<long>();
            if (j.contains("rng")) cfg.rng_family = j.at("rng").get<std::string>();
            if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
            if (j.contains("symmetrize")) cfg.symmetrize = j.at("symmetrize").get<bool>();
            if (j.contains("steps")) cfg.steps = j.at("steps").get<long>();
            if (j.contains("trajectories")) cfg.trajectories = j.at("trajectories").get<long>();
            if (j.contains("tol_exponent")) cfg.tol_exponent = j.at("tol_exponent").get<long>();
            if (j.contains("germ_depth")) cfg.germ_depth = j.at("germ_depth").get<long>();
            if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
            if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
            for (const auto& atom : j.at("atoms")) {
                Mat3 m;
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c)
                        m.a[r][c] = rat_from_string(atom.at("matrix").at(r).at(c).get<std::string>());
                Rat w = atom.contains("weight") ? rat_from_string(atom.at("weight").get<std::string>())
                                                : Rat(1);
                cfg.atoms.emplace_back(m, w);
            }
        } catch (const json::exception& e) {
            fail(errc::config_error, e.what());
        }
        cfg.validate();
        return cfg;
    }

    void validate() const {
        if (!is_prime(prime)) fail(errc::config_error, "prime field must be a prime");
        if (rng_family != kRngFamily)
            fail(errc::config_error, "unknown rng family (expected " + std::string(kRngFamily) + ")");
        if (atoms.empty()) fail(errc::config_error, "no atoms");
        if (steps < 1 || trajectories < 1) fail(errc::config_error, "steps and trajectories must be >= 1");
        if (tol_exponent < 1) fail(errc::config_error, "tol_exponent must be >= 1");
        if (germ_depth < 1) fail(errc::config_error, "germ_depth must be >= 1");
        if (workers < 1) fail(errc::config_error, "workers must be >= 1");
        for (const auto& [g, w] : atoms) {
            if (det(g) != 1) fail(errc::config_error, "atom determinant must be 1");
            if (w <= 0) fail(errc::config_error, "atom weight must be positive");
        }
    }

    MeasureSpec measure() const { return MeasureSpec::make(atoms, symmetrize, prime, seed); }
};

// Work-stealing loop over trajectory ids; results land in id-indexed slots.
template <class Fn>
void parallel_ids(long count, int workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    int n = std::min<long>(workers, count);
    pool.reserve(n);
    for (int w = 0; w < n; ++w)
        pool.emplace_back([&] {
            for (;;) {
                long i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

// Reference measures used by examples and the verification suite.
inline MeasureSpec fixture_zariski_dense(long p, std::uint64_t seed) {
    Mat3 g1 = diag3(Rat(1, p), 1, Rat(p));
    Mat3 cycle = mat3({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}});
    Mat3 shear = mat3({{1, 1, 0}, {0, 1, 0}, {0, 0, 1}});
    Mat3 g2 = cycle * shear;
    return MeasureSpec::make({{g1, Rat(1)}, {g2, Rat(1)}}, true, p, seed);
}

inline MeasureSpec fixture_elementary(long p, std::uint64_t seed) {
    Mat3 h = diag3(Rat(1, p), 1, Rat(p));
    return MeasureSpec::make({{h, Rat(1)}}, true, p, seed);
}

inline MeasureSpec fixture_dirac_diag(long p, std::uint64_t seed) {
    Mat3 h = diag3(Rat(1, p), 1, Rat(p));
    return MeasureSpec::make({{h, Rat(1)}}, false, p, seed);
}

struct CommandOutput {
    json summary;
    std::map<std::string, std::string> files;  // name -> contents
    int exit_code = 0;
};

inline CommandOutput run_lyapunov_command(const ExperimentConfig& cfg) {
    MeasureSpec spec = cfg.measure();
    std::vector<TypeVector> finals(static_cast<std::size_t>(cfg.trajectories));
    parallel_ids(cfg.trajectories, cfg.workers, [&](long t) {
        TypeVector last;
        run_walk(spec, cfg.steps, static_cast<std::uint64_t>(t), kFlagsNever,
                 [&](const TrajectoryRecord& r) { last = r.theta; });
        for (int c = 0; c < 3; ++c) last.coords[c] /= cfg.steps;
        finals[static_cast<std::size_t>(t)] = last;
    });
    EstimateReport rep = summarize_final_types(finals);

    CommandOutput out;
    out.summary = to_json(rep);
    out.summary["steps"] = cfg.steps;
    out.summary["trajectories"] = cfg.trajectories;
    out.files["lyapunov.json"] = out.summary.dump(2) + "\n";
    std::string csv = csv_row({"traj", "theta1", "theta2", "theta3"});
    for (std::size_t t = 0; t < finals.size(); ++t)
        csv += csv_row({std::to_string(t), finals[t].coords[0].str(), finals[t].coords[1].str(),
                        finals[t].coords[2].str()});
    out.files["final_types.csv"] = csv;
    return out;
}

inline CommandOutput run_walk_command(const ExperimentConfig& cfg) {
    MeasureSpec spec = cfg.measure();
    std::vector<std::string> jsonl(static_cast<std::size_t>(cfg.trajectories));
    std::vector<std::string> csv(static_cast<std::size_t>(cfg.trajectories));
    parallel_ids(cfg.trajectories, cfg.workers, [&](long t) {
        std::string lines, rows;
        run_walk(spec, cfg.steps, static_cast<std::uint64_t>(t), 1, [&](const TrajectoryRecord& r) {
            lines += record_to_json(static_cast<std::uint64_t>(t), r).dump() + "\n";
            json stepj = std::sqrt(static_cast<double>(r.step_sq));
            rows += csv_row({std::to_string(t), std::to_string(r.n), r.theta.coords[0].str(),
                             r.theta.coords[1].str(), r.theta.coords[2].str(), stepj.dump(),
                             r.gap_exp ? std::to_string(*r.gap_exp) : ""});
        });
        jsonl[static_cast<std::size_t>(t)] = std::move(lines);
        csv[static_cast<std::size_t>(t)] = std::move(rows);
    });
    CommandOutput out;
    std::string all;
    for (const auto& s : jsonl) all += s;
    std::string allcsv = csv_row({"traj", "n", "theta1", "theta2", "theta3", "step", "gap_exp"});
    for (const auto& s : csv) allcsv += s;
    out.files["records.jsonl"] = all;
    out.files["records.csv"] = allcsv;
    out.summary = json{{"trajectories", cfg.trajectories}, {"steps", cfg.steps},
                       {"records", cfg.trajectories * cfg.steps}};
    return out;
}

inline CommandOutput run_opposition_command(const ExperimentConfig& cfg) {
    MeasureSpec spec = cfg.measure();
    const long pairs = cfg.trajectories;
    std::vector<int> status(static_cast<std::size_t>(pairs));  // 0 skipped, 1 opposite, 2 not
    parallel_ids(pairs, cfg.workers, [&](long j) {
        auto f1 = run_limit_flag(spec, cfg.steps, static_cast<std::uint64_t>(2 * j), cfg.tol_exponent);
        auto f2 =
            run_limit_flag(spec, cfg.steps, static_cast<std::uint64_t>(2 * j + 1), cfg.tol_exponent);
        if (!f1.flag || !f2.flag)
            status[static_cast<std::size_t>(j)] = 0;
        else
            status[static_cast<std::size_t>(j)] = opposite(*f1.flag, *f2.flag) ? 1 : 2;
    });
    OppositionReport rep;
    rep.pairs = pairs;
    for (int s : status) {
        if (s == 0)
            ++rep.skipped;
        else {
            ++rep.converged;
            if (s == 1) ++rep.opposite_count;
        }
    }
    rep.rate = rep.converged ? static_cast<double>(rep.opposite_count) / rep.converged : 0.0;
    CommandOutput out;
    out.summary = to_json(rep);
    out.summary["steps"] = cfg.steps;
    out.summary["tol_exponent"] = cfg.tol_exponent;
    out.files["opposition.json"] = out.summary.dump(2) + "\n";
    return out;
}

inline std::vector<std::optional<Flag>> collect_limit_flags(const MeasureSpec& spec, long steps,
                                                            long trajectories, long tol_exponent,
                                                            int workers) {
    std::vector<std::optional<Flag>> flags(static_cast<std::size_t>(trajectories));
    parallel_ids(trajectories, workers, [&](long t) {
        flags[static_cast<std::size_t>(t)] =
            run_limit_flag(spec, steps, static_cast<std::uint64_t>(t), tol_exponent).flag;
    });
    return flags;
}

inline CommandOutput run_stationary_command(const ExperimentConfig& cfg) {
    MeasureSpec spec = cfg.measure();
    auto maybe = collect_limit_flags(spec, cfg.steps, cfg.trajectories, cfg.tol_exponent, cfg.workers);
    std::vector<Flag> flags;
    long skipped = 0;
    for (auto& f : maybe) {
        if (f)
            flags.push_back(*f);
        else
            ++skipped;
    }
    CommandOutput out;
    json grid = json::array();
    std::string csv = csv_row({"depth", "residual"});
    if (!flags.empty()) {
        for (long k = 1; k <= cfg.germ_depth; ++k) {
            Rat res = stationarity_residual(spec, flags, k);
            grid.push_back(json{{"depth", k},
                                {"residual", res.str()},
                                {"residual_value", static_cast<double>(res)}});
            csv += csv_row({std::to_string(k), res.str()});
        }
    }
    out.summary = json{{"sample", static_cast<long>(flags.size())},
                       {"skipped", skipped},
                       {"residuals", grid}};
    out.files["stationary.json"] = out.summary.dump(2) + "\n";
    out.files["stationary.csv"] = csv;
    return out;
}

inline CommandOutput run_germ_command(const ExperimentConfig& cfg) {
    MeasureSpec spec = cfg.measure();
    struct PerTraj {
        GermStabilization stab;
    };
    std::vector<PerTraj> rows(static_cast<std::size_t>(cfg.trajectories));
    parallel_ids(cfg.trajectories, cfg.workers, [&](long t) {
        GermTracker germs;
        LimitFlagTracker limits(cfg.steps);
        run_walk(spec, cfg.steps, static_cast<std::uint64_t>(t), 1, [&](const TrajectoryRecord& r) {
            germs.observe(r);
            limits.observe(r);
        });
        auto lf = limits.finalize(cfg.tol_exponent, spec.prime);
        rows[static_cast<std::size_t>(t)].stab = germs.finalize(lf.flag, spec.prime);
    });
    long stabilized = 0, matched = 0;
    std::map<long, long> histogram;
    for (const auto& r : rows) {
        if (!r.stab.n0) continue;
        ++stabilized;
        if (r.stab.match) ++matched;
        ++histogram[*r.stab.n0];
    }
    CommandOutput out;
    json hist = json::array();
    std::string csv = csv_row({"n0", "count"});
    for (const auto& [n0, c] : histogram) {
        hist.push_back(json{{"n0", n0}, {"count", c}});
        csv += csv_row({std::to_string(n0), std::to_string(c)});
    }
    out.summary = json{{"trajectories", cfg.trajectories},
                       {"stabilized", stabilized},
                       {"matched", matched},
                       {"histogram", hist}};
    out.files["germ.json"] = out.summary.dump(2) + "\n";
    out.files["germ_hist.csv"] = csv;
    return out;
}

inline json tree_point_to_json(const TreePoint& x) {
    auto mat = [](const Mat2& m) {
        json rows = json::array();
        for (int i = 0; i < 2; ++i)
            rows.push_back(json::array({numerator(m.a[i][0]).str(), numerator(m.a[i][1]).str()}));
        return rows;
    };
    return json{{"anchor", mat(x.anchor.canon)},
                {"toward", mat(x.toward.canon)},
                {"offset", x.offset.str()}};
}

inline CommandOutput run_tree_demo_command(const ExperimentConfig& cfg) {
    const long p = cfg.prime;
    CommandOutput out;
    PanelTree tree = PanelTree::for_line({Int(1), Int(0), Int(0)}, p);

    // Bijection round trip over a grid of residue chambers.
    long round_trips = 0, round_trip_failures = 0;
    for (long a = 0; a < p; ++a)
        for (long b = 0; b < p; ++b) {
            for (auto& e : {TreeEnd::make({Rat(1), Rat(a * p + b)}), TreeEnd::make({Rat(a * p + b), Rat(1)})}) {
                Flag c = tree.chamber_from_end(e);
                TreeEnd back = tree.end_from_chamber(c);
                ++round_trips;
                if (!(back == e)) ++round_trip_failures;
            }
        }

    // Barycenters of the two reference end triples.
    std::vector<TreeEnd> s1{TreeEnd::make({Rat(1), Rat(0)}), TreeEnd::make({Rat(0), Rat(1)}),
                            TreeEnd::make({Rat(1), Rat(1)})};
    std::vector<TreeEnd> s2{TreeEnd::make({Rat(1), Rat(0)}), TreeEnd::make({Rat(0), Rat(1)}),
                            TreeEnd::make({Rat(1), Rat(p)})};
    TreePoint b1 = bary_ends(s1, p);
    TreePoint b2 = bary_ends(s2, p);

    // beta_eps two-atom fixture: midpoint of a distance-2 segment.
    TreeVertex base = TreeVertex::base();
    TreeVertex far{hermite_canonical(diag2(1, Rat(p) * p), p)};
    TreePoint beta = beta_eps({{TreePoint::at_vertex(base), Rat(1, 2)},
                               {TreePoint::at_vertex(far), Rat(1, 2)}},
                              Rat(1, 4), p);

    // Pushforward of the uniform measure on the first triple: a Dirac.
    auto push = measure_pushforward(
        {{s1[0], Rat(1, 3)}, {s1[1], Rat(1, 3)}, {s1[2], Rat(1, 3)}}, p);

    out.summary = json{{"round_trips", round_trips},
                       {"round_trip_failures", round_trip_failures},
                       {"bary_coordinate_triple", tree_point_to_json(b1)},
                       {"bary_branch_triple", tree_point_to_json(b2)},
                       {"beta_eps_two_atoms", tree_point_to_json(beta)},
                       {"pushforward_atoms", static_cast<long>(push.size())}};
    out.files["tree_demo.json"] = out.summary.dump(2) + "\n";
    if (round_trip_failures) out.exit_code = 3;
    return out;
}

// Exact triangle inequality check from squared lengths.
inline bool triangle_from_squares(const Rat& a2, const Rat& b2, const Rat& c2) {
    Rat lhs = a2 - b2 - c2;
    if (lhs <= 0) return true;
    return lhs * lhs <= 4 * b2 * c2;
}

inline CommandOutput run_check_command(const ExperimentConfig& cfg) {
    const long p = cfg.prime;
    json suites = json::array();
    bool all_ok = true;
    auto record = [&](const std::string& name, long count, long failures) {
        suites.push_back(json{{"suite", name}, {"cases", count}, {"failures", failures}});
        if (failures) all_ok = false;
    };

    {  // Smith vs minor-gcd oracle + exact reconstruction
        PhiloxStream rng(cfg.seed, 1);
        long fails = 0;
        const long cases = 200;
        for (long i = 0; i < cases; ++i) {
            Mat3 m = random_nonsingular<3>(rng, p);
            auto s = smith_decompose(m, p);
            if (s.U * smith_diagonal(s, p) * s.V != m) ++fails;
            auto oracle = smith_valuations_by_minors(m, p);
            if (oracle != s.valuations) ++fails;
            if (!is_p_unimodular(s.U, p) || !is_p_unimodular(s.V, p)) ++fails;
        }
        record("smith_vs_minor_oracle", cases, fails);
    }
    {  // Hermite canonicalization invariances
        PhiloxStream rng(cfg.seed, 2);
        long fails = 0;
        const long cases = 100;
        for (long i = 0; i < cases; ++i) {
            Mat3 m = random_nonsingular<3>(rng, p);
            Mat3 h = hermite_canonical(m, p);
            if (hermite_canonical(h, p) != h) ++fails;
            Mat3 u = random_p_unimodular<3>(rng, p);
            if (hermite_canonical(m * u, p) != h) ++fails;
            if (hermite_canonical(Rat(p) * m, p) != h) ++fails;
        }
        record("hermite_canonical_invariance", cases, fails);
    }
    {  // Iwasawa reconstruction and column-minor route
        PhiloxStream rng(cfg.seed, 3);
        long fails = 0;
        const long cases = 100;
        for (long i = 0; i < cases; ++i) {
            Mat3 m = random_nonsingular<3>(rng, p);
            auto d = iwasawa_decompose(m, p);
            Mat3 dd = diag3(pow_rat(p, d.b[0]), pow_rat(p, d.b[1]), pow_rat(p, d.b[2]));
            if (d.K * dd * d.N != m) ++fails;
            if (!is_p_unimodular(d.K, p)) ++fails;
            if (iwasawa_valuations(m, p) != d.b) ++fails;
        }
        record("iwasawa_reconstruction", cases, fails);
    }
    {  // Metric axioms on random vertices
        PhiloxStream rng(cfg.seed, 4);
        long fails = 0;
        const long cases = 60;
        for (long i = 0; i < cases; ++i) {
            BuildingVertex x = random_vertex(rng, p, 3);
            BuildingVertex y = random_vertex(rng, p, 3);
            BuildingVertex z = random_vertex(rng, p, 3);
            if (!(cartan_type(y, x, p) == opposition_involution(cartan_type(x, y, p)))) ++fails;
            if (!triangle_from_squares(distance_sq(x, y, p), distance_sq(x, z, p),
                                       distance_sq(z, y, p)))
                ++fails;
        }
        record("vertex_metric_axioms", cases, fails);
    }
    {  // Flag ultrametric
        PhiloxStream rng(cfg.seed, 5);
        long fails = 0;
        const long cases = 100;
        for (long i = 0; i < cases; ++i) {
            Flag a = random_flag(rng, p), b = random_flag(rng, p), c = random_flag(rng, p);
            Rat ab = flag_distance(a, b, p), bc = flag_distance(b, c, p), ac = flag_distance(a, c, p);
            if (ac > std::max(ab, bc)) ++fails;
        }
        record("flag_ultrametric", cases, fails);
    }
    {  // Tree four-point condition
        PhiloxStream rng(cfg.seed, 6);
        long fails = 0;
        const long cases = 50;
        for (long i = 0; i < cases; ++i) {
            std::array<TreeVertex, 4> v;
            for (auto& t : v) {
                Mat2 g = random_p_unimodular<2>(rng, p) * diag2(1, pow_rat(p, rng.next_below(4)));
                t = TreeVertex{hermite_canonical(g, p)};
            }
            long d01 = tree_distance(v[0], v[1], p), d23 = tree_distance(v[2], v[3], p);
            long d02 = tree_distance(v[0], v[2], p), d13 = tree_distance(v[1], v[3], p);
            long d03 = tree_distance(v[0], v[3], p), d12 = tree_distance(v[1], v[2], p);
            long s1 = d01 + d23, s2 = d02 + d13, s3 = d03 + d12;
            long m1 = std::max({s1, s2, s3});
            long m2 = s1 + s2 + s3 - m1 - std::min({s1, s2, s3});
            if (m1 != m2) ++fails;
        }
        record("tree_four_point", cases, fails);
    }

    CommandOutput out;
    out.summary = json{{"ok", all_ok}, {"suites", suites}};
    out.exit_code = all_ok ? 0 : 3;
    return out;
}

}  // namespace a2walk
