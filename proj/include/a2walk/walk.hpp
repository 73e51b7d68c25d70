#pragma once

// The random dynamical system: finitely supported det-1 measures, seeded
// trajectory sampling with bitwise reproducibility, and the estimators used
// by the empirical checks (Lyapunov vector, limit flags, opposition rate,
// stationarity residual, tracking deviations, germ stabilization).
//
// Growth control: raw products Z_n are never stored. The state is the pair
// (vertex canonical form V_n, p-unimodular witness K_n) with Z_n ~ V_n K_n up
// to a p-power homothety, re-reduced every step; every recorded statistic is
// a function of V_n.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "a2walk/building.hpp"
#include "a2walk/decompositions.hpp"
#include "a2walk/errors.hpp"
#include "a2walk/matrix.hpp"
#include "a2walk/numeric.hpp"
#include "a2walk/rng.hpp"
#include "a2walk/weyl.hpp"

namespace a2walk {

struct MeasureSpec {
    struct Atom {
        Mat3 g;
        Rat weight;          // normalized
        TypeVector step_type;  // theta(o, g o)
        Rat step_sq;           // squared displacement of one increment
    };

    std::vector<Atom> atoms;
    long prime = 3;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> thresholds;  // cumulative weights scaled to 2^64

    static MeasureSpec make(const std::vector<std::pair<Mat3, Rat>>& raw_atoms, bool symmetrize,
                            long prime, std::uint64_t seed) {
        if (raw_atoms.empty()) fail(errc::empty_measure, "no atoms");
        std::vector<std::pair<Mat3, Rat>> list = raw_atoms;
        if (symmetrize)
            for (const auto& [g, w] : raw_atoms) list.emplace_back(adjugate(g), w);

        MeasureSpec spec;
        spec.prime = prime;
        spec.seed = seed;
        Rat total = 0;
        for (const auto& [g, w] : list) {
            if (w <= 0) fail(errc::invalid_argument, "atom weights must be positive");
            if (det(g) != 1) fail(errc::not_in_group, "atoms must have determinant 1");
            total += w;
        }
        const BuildingVertex o = BuildingVertex::standard();
        for (const auto& [g, w] : list) {
            Atom a;
            a.g = g;
            a.weight = w / total;
            a.step_type = cartan_type(o, act(g, o, prime), prime);
            a.step_sq = a.step_type.norm_sq();
            spec.atoms.push_back(std::move(a));
        }
        // Exact cumulative thresholds on the 64-bit draw.
        Rat cum = 0;
        Int two64 = Int(1) << 64;
        for (std::size_t i = 0; i + 1 < spec.atoms.size(); ++i) {
            cum += spec.atoms[i].weight;
            Int t = floor_int(cum * Rat(two64));
            spec.thresholds.push_back(static_cast<std::uint64_t>(t));
        }
        return spec;
    }

    std::size_t pick(std::uint64_t trajectory_id, long step) const {
        std::uint64_t u = philox_u64(seed, trajectory_id, static_cast<std::uint64_t>(step));
        for (std::size_t i = 0; i < thresholds.size(); ++i)
            if (u < thresholds[i]) return i;
        return atoms.size() - 1;
    }

private:
    static Int floor_int(const Rat& q) {
        Int r;
        mpz_fdiv_q(r.backend().data(), numerator(q).backend().data(),
                   denominator(q).backend().data());
        return r;
    }
};

struct TrajectoryRecord {
    long n = 0;
    BuildingVertex vertex;             // Z_n o in canonical form
    TypeVector theta;                  // theta(o, Z_n o)
    Rat step_sq;                       // d(Z_{n-1} o, Z_n o)^2
    std::optional<Flag> flag;          // absent while the type is non-regular
    std::optional<GermChamber> germ;   // present iff flag is
    std::optional<long> gap_exp;       // exponent of delta(F_{n-1}, F_n); absent if undefined or equal
};

inline constexpr long kFlagsNever = std::numeric_limits<long>::max();

// Core sampler. Calls visit(record) for n = 1..steps; flags (and germs) are
// extracted from step flags_from on. Deterministic in (spec.seed,
// trajectory_id, n): the length-M prefix of a longer run is the M-step run.
template <class Visitor>
void run_walk(const MeasureSpec& spec, long steps, std::uint64_t trajectory_id, long flags_from,
              Visitor&& visit) {
    if (steps < 1) fail(errc::invalid_argument, "need at least one step");
    if (spec.atoms.empty()) fail(errc::empty_measure, "no atoms");
    const long p = spec.prime;
    Mat3 v = Mat3::identity();  // vertex canonical form
    Mat3 k = Mat3::identity();  // p-unimodular witness
    std::optional<Flag> prev_flag;

    for (long n = 1; n <= steps; ++n) {
        const auto& atom = spec.atoms[spec.pick(trajectory_id, n)];
        Mat3 w = v * (k * atom.g);
        v = hermite_canonical(w, p);
        // K = V^{-1} W up to the p-power making it p-unimodular.
        Mat3 kraw = adjugate(v) * w;
        Val kmin = min_entry_valuation(kraw, p);
        k = pow_rat(p, -*kmin) * kraw;

        TrajectoryRecord rec;
        rec.n = n;
        rec.vertex = BuildingVertex{v};
        auto vals = smith_valuations_by_minors(v, p);
        auto coords = negate_and_center(vals);
        rec.theta = TypeVector{{coords[0], coords[1], coords[2]}};
        rec.step_sq = atom.step_sq;
        if (n >= flags_from && vals[0] < vals[1] && vals[1] < vals[2]) {
            rec.flag = cartan_flag(v, p);
            rec.germ = flag_mod_p(*rec.flag, p);
            if (prev_flag) rec.gap_exp = flag_gap_exponent(*prev_flag, *rec.flag, p);
            prev_flag = rec.flag;
        } else {
            prev_flag.reset();
        }
        visit(rec);
    }
}

inline std::vector<TrajectoryRecord> sample_path(const MeasureSpec& spec, long steps,
                                                 std::uint64_t trajectory_id) {
    std::vector<TrajectoryRecord> out;
    out.reserve(static_cast<std::size_t>(steps));
    run_walk(spec, steps, trajectory_id, 1, [&](const TrajectoryRecord& r) { out.push_back(r); });
    return out;
}

// ----- Lyapunov estimation -----

struct EstimateReport {
    TypeVector lambda_hat;                   // exact mean of theta(o, Z_N o)/N
    std::array<double, 3> stderr_mean{};     // per-coordinate sd / sqrt(M)
    std::array<double, 3> spread{};          // per-coordinate sd across trajectories
    bool regular = false;                    // both root pairings of lambda_hat positive
    double regular_margin = 0.0;             // min pairing in stderr units
    double iota_asymmetry = 0.0;             // ||lambda_hat - iota|| in stderr units
    double drift_hat = 0.0;                  // mean of ||theta||/N
    std::vector<TypeVector> final_types;     // per-trajectory normalized types
};

namespace detail {

inline double ratio_or_inf(double num, double den) {
    if (den > 0) return num / den;
    if (num == 0) return 0.0;
    return std::numeric_limits<double>::infinity();
}

}  // namespace detail

inline EstimateReport summarize_final_types(const std::vector<TypeVector>& final_types) {
    const std::size_t m = final_types.size();
    EstimateReport rep;
    rep.final_types = final_types;
    for (int c = 0; c < 3; ++c) {
        Rat s = 0;
        for (const auto& t : final_types) s += t.coords[c];
        rep.lambda_hat.coords[c] = s / Rat(static_cast<long>(m));
    }
    std::array<double, 3> mean{};
    for (int c = 0; c < 3; ++c) mean[c] = static_cast<double>(rep.lambda_hat.coords[c]);
    for (int c = 0; c < 3; ++c) {
        double ss = 0;
        for (const auto& t : final_types) {
            double d = static_cast<double>(t.coords[c]) - mean[c];
            ss += d * d;
        }
        double var = m > 1 ? ss / static_cast<double>(m - 1) : 0.0;
        rep.spread[c] = std::sqrt(var);
        rep.stderr_mean[c] = std::sqrt(var / static_cast<double>(m));
    }

    auto pairings = root_pairings(rep.lambda_hat);
    rep.regular = pairings.regular;
    {
        // Margins of the two pairings in their own stderr units.
        double m1 = 0, m2 = 0, s1 = 0, s2 = 0;
        for (const auto& t : final_types) {
            auto pr = root_pairings(t);
            m1 += static_cast<double>(pr.a1);
            m2 += static_cast<double>(pr.a2);
        }
        m1 /= static_cast<double>(m);
        m2 /= static_cast<double>(m);
        for (const auto& t : final_types) {
            auto pr = root_pairings(t);
            s1 += (static_cast<double>(pr.a1) - m1) * (static_cast<double>(pr.a1) - m1);
            s2 += (static_cast<double>(pr.a2) - m2) * (static_cast<double>(pr.a2) - m2);
        }
        double se1 = m > 1 ? std::sqrt(s1 / static_cast<double>(m - 1) / static_cast<double>(m)) : 0;
        double se2 = m > 1 ? std::sqrt(s2 / static_cast<double>(m - 1) / static_cast<double>(m)) : 0;
        rep.regular_margin =
            std::min(detail::ratio_or_inf(m1, se1), detail::ratio_or_inf(m2, se2));
    }
    {
        // lambda_hat - iota(lambda_hat) against the stderr of the difference.
        TypeVector iota = opposition_involution(rep.lambda_hat);
        std::array<double, 3> diff_mean{};
        for (int c = 0; c < 3; ++c)
            diff_mean[c] = static_cast<double>(rep.lambda_hat.coords[c] - iota.coords[c]);
        std::array<double, 3> diff_var{};
        for (const auto& t : final_types) {
            TypeVector it = opposition_involution(t);
            for (int c = 0; c < 3; ++c) {
                double d = static_cast<double>(t.coords[c] - it.coords[c]) - diff_mean[c];
                diff_var[c] += d * d;
            }
        }
        double num = 0, den = 0;
        for (int c = 0; c < 3; ++c) {
            num += diff_mean[c] * diff_mean[c];
            double var = m > 1 ? diff_var[c] / static_cast<double>(m - 1) : 0.0;
            den += var / static_cast<double>(m);
        }
        rep.iota_asymmetry = detail::ratio_or_inf(std::sqrt(num), std::sqrt(den));
    }
    for (const auto& t : final_types) rep.drift_hat += t.norm();
    rep.drift_hat /= static_cast<double>(m);
    return rep;
}

inline EstimateReport lyapunov_estimate(const MeasureSpec& spec, long steps, long trajectories) {
    if (trajectories < 2) fail(errc::invalid_argument, "need at least 2 trajectories");
    std::vector<TypeVector> finals(static_cast<std::size_t>(trajectories));
    for (long t = 0; t < trajectories; ++t) {
        TypeVector last;
        run_walk(spec, steps, static_cast<std::uint64_t>(t), kFlagsNever,
                 [&](const TrajectoryRecord& r) { last = r.theta; });
        for (int c = 0; c < 3; ++c) last.coords[c] /= steps;
        finals[static_cast<std::size_t>(t)] = last;
    }
    return summarize_final_types(finals);
}

// ----- limit flags -----

struct LimitFlagResult {
    std::optional<Flag> flag;            // present iff converged at the requested exponent
    std::optional<long> best_exponent;   // worst gap to F_N over the window (absent: no flags)
};

// Streaming collector of the last-quarter flags of one trajectory.
class LimitFlagTracker {
public:
    LimitFlagTracker(long steps) : window_start_(steps - steps / 4 + 1) {}

    long window_start() const { return window_start_; }

    void observe(const TrajectoryRecord& r) {
        if (r.n < window_start_) return;
        window_.push_back(r.flag);
    }

    LimitFlagResult finalize(long tol_exponent, long p) const {
        LimitFlagResult res;
        if (window_.empty() || !window_.back()) return res;
        const Flag& last = *window_.back();
        std::optional<long> worst;
        for (const auto& f : window_) {
            if (!f) return res;  // a flagless step in the window: not converged
            auto gap = flag_gap_exponent(*f, last, p);
            if (gap) worst = worst ? std::min(*worst, *gap) : *gap;
        }
        res.best_exponent = worst;  // absent = all equal: converged at any exponent
        if (!worst || *worst >= tol_exponent) res.flag = last;
        return res;
    }

private:
    long window_start_;
    std::vector<std::optional<Flag>> window_;
};

inline LimitFlagResult limit_flag(const std::vector<TrajectoryRecord>& path, long tol_exponent,
                                  long p) {
    if (path.empty()) fail(errc::empty_trajectory, "empty path");
    LimitFlagTracker tracker(static_cast<long>(path.size()));
    for (const auto& r : path) tracker.observe(r);
    return tracker.finalize(tol_exponent, p);
}

inline LimitFlagResult run_limit_flag(const MeasureSpec& spec, long steps,
                                      std::uint64_t trajectory_id, long tol_exponent) {
    LimitFlagTracker tracker(steps);
    run_walk(spec, steps, trajectory_id, tracker.window_start(),
             [&](const TrajectoryRecord& r) { tracker.observe(r); });
    return tracker.finalize(tol_exponent, spec.prime);
}

// ----- opposition statistics -----

struct OppositionReport {
    long pairs = 0;
    long converged = 0;
    long skipped = 0;
    long opposite_count = 0;
    double rate = 0.0;  // among converged pairs
};

inline OppositionReport opposition_rate(const MeasureSpec& spec, long steps, long pairs,
                                        long tol_exponent) {
    if (pairs < 1) fail(errc::invalid_argument, "need at least one pair");
    OppositionReport rep;
    rep.pairs = pairs;
    for (long j = 0; j < pairs; ++j) {
        auto f1 = run_limit_flag(spec, steps, static_cast<std::uint64_t>(2 * j), tol_exponent);
        auto f2 = run_limit_flag(spec, steps, static_cast<std::uint64_t>(2 * j + 1), tol_exponent);
        if (!f1.flag || !f2.flag) {
            ++rep.skipped;
            continue;
        }
        ++rep.converged;
        if (opposite(*f1.flag, *f2.flag)) ++rep.opposite_count;
    }
    rep.rate = rep.converged > 0
                   ? static_cast<double>(rep.opposite_count) / static_cast<double>(rep.converged)
                   : 0.0;
    return rep;
}

// ----- stationarity residual -----

namespace detail {

// Projective point of P^2(Z/p^k) from a primitive integer vector: reduce,
// then scale so the first unit coordinate is 1.
inline std::array<Int, 3> projective_mod_pk(const std::array<Int, 3>& v, long p, long k) {
    Int pk = pow_int(p, k);
    std::array<Int, 3> r;
    for (int i = 0; i < 3; ++i) {
        r[i] = v[i] % pk;
        if (r[i] < 0) r[i] += pk;
    }
    int lead = -1;
    for (int i = 0; i < 3 && lead < 0; ++i)
        if (r[i] % p != 0) lead = i;
    if (lead < 0) fail(errc::invalid_argument, "representative not primitive");
    Int inv;
    if (mpz_invert(inv.backend().data(), r[lead].backend().data(), pk.backend().data()) == 0)
        fail(errc::invalid_argument, "no inverse mod p^k");
    for (int i = 0; i < 3; ++i) r[i] = r[i] * inv % pk;
    return r;
}

struct FlagCell {
    std::array<Int, 3> line;
    std::array<Int, 3> plane;
    auto operator<=>(const FlagCell&) const = default;
};

inline FlagCell flag_cell(const Flag& f, long p, long k) {
    return FlagCell{projective_mod_pk(f.line, p, k), projective_mod_pk(f.plane, p, k)};
}

}  // namespace detail

// Total-variation distance between the empirical mod-p^k cell distribution of
// the sample and its one-step convolution with the measure. Exact rational.
inline Rat stationarity_residual(const MeasureSpec& spec, const std::vector<Flag>& flags,
                                 long depth) {
    if (depth < 1) fail(errc::invalid_depth, "depth must be >= 1");
    if (flags.empty()) fail(errc::invalid_argument, "empty flag sample");
    const long p = spec.prime;
    std::map<detail::FlagCell, Rat> emp, conv;
    const Rat unit = Rat(1, static_cast<long>(flags.size()));
    for (const auto& f : flags) {
        emp[detail::flag_cell(f, p, depth)] += unit;
        for (const auto& atom : spec.atoms)
            conv[detail::flag_cell(transform_flag(atom.g, f), p, depth)] += unit * atom.weight;
    }
    Rat tv = 0;
    for (const auto& [cell, w] : emp) {
        auto it = conv.find(cell);
        Rat q = it == conv.end() ? Rat(0) : it->second;
        tv += abs(w - q);
    }
    for (const auto& [cell, w] : conv)
        if (!emp.count(cell)) tv += w;
    return tv / 2;
}

// ----- lambda-regular tracking -----

// Nearest dominant integer point of the apartment to n*lambda.
inline std::array<long, 3> nearest_dominant_integer(const TypeVector& lambda, long n) {
    auto round_half_up = [](const Rat& q) {
        Int num = numerator(q * 2 + 1), den = denominator(q * 2 + 1) * 2;
        Int r;
        mpz_fdiv_q(r.backend().data(), num.backend().data(), den.backend().data());
        return static_cast<long>(r);
    };
    long r0 = round_half_up(lambda.coords[0] * n);
    long r1 = round_half_up(lambda.coords[1] * n);
    long r2 = -r0 - r1;
    std::array<long, 3> c{r0, r1, r2};
    std::sort(c.begin(), c.end(), std::greater<long>());
    return c;
}

// Deviations d(Z_n o, gamma(n))/n from the lambda-ray through o in the sector
// Q(o, F); gamma is realized inside the apartment spanned by F and a default
// opposite flag via an adapted p-unimodular basis. Wall directions are
// allowed (the ray then runs along the sector boundary); only lambda = 0 has
// no ray.
inline std::vector<double> tracking_deviation(const std::vector<TrajectoryRecord>& path,
                                              const Flag& f, const TypeVector& lambda, long p) {
    if (path.empty()) fail(errc::empty_trajectory, "empty path");
    if (lambda.is_zero()) fail(errc::non_regular_type, "tracking needs a nonzero direction");
    Mat3 h = adapted_unimodular_basis(f, p);
    std::vector<double> devs;
    devs.reserve(path.size());
    for (const auto& rec : path) {
        auto c = nearest_dominant_integer(lambda, rec.n);
        Mat3 d = diag3(pow_rat(p, -c[0]), pow_rat(p, -c[1]), pow_rat(p, -c[2]));
        BuildingVertex gamma = BuildingVertex::from_basis(h * d, p);
        Rat dist_sq = distance_sq(rec.vertex, gamma, p);
        devs.push_back(std::sqrt(static_cast<double>(dist_sq)) / static_cast<double>(rec.n));
    }
    return devs;
}

// ----- germ stabilization -----

struct GermStabilization {
    std::optional<long> n0;  // absent: never stabilized
    bool match = false;      // the stable germ equals flag_mod_p(limit flag)
};

// Streaming tracker: smallest n0 with the germ present and constant on [n0, N].
class GermTracker {
public:
    void observe(const TrajectoryRecord& r) {
        if (!r.germ) {
            candidate_.reset();
            return;
        }
        if (!candidate_ || !(candidate_->second == *r.germ)) candidate_ = {r.n, *r.germ};
    }

    GermStabilization finalize(const std::optional<Flag>& limit, long p) const {
        GermStabilization out;
        if (!candidate_) return out;
        out.n0 = candidate_->first;
        if (limit) out.match = candidate_->second == flag_mod_p(*limit, p);
        return out;
    }

private:
    std::optional<std::pair<long, GermChamber>> candidate_;
};

inline GermStabilization germ_stabilization(const std::vector<TrajectoryRecord>& path,
                                            const std::optional<Flag>& limit, long p) {
    GermTracker tracker;
    for (const auto& r : path) tracker.observe(r);
    return tracker.finalize(limit, p);
}

}  // namespace a2walk
