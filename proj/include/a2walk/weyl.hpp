#pragma once

// Exact geometry of the A2 model apartment: the dominant cone, the Weyl group
// S3 acting by coordinate permutations, the opposition involution, and the
// separation/regularity diagnostics used by the walk analysis.
//
// Convention: apartment vectors are sum-zero triples of exact rationals, one
// lattice step per valuation unit; the metric is the Euclidean norm on those
// triples and squared lengths are kept exact.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "a2walk/errors.hpp"
#include "a2walk/numeric.hpp"

namespace a2walk {

// Permutation of {0,1,2}; perm[i] is the image of slot i.
struct WeylElement {
    std::array<int, 3> perm{0, 1, 2};

    static WeylElement identity() { return {}; }
    static WeylElement longest() { return WeylElement{{2, 1, 0}}; }

    // (a*b) acts as "apply b, then a".
    friend WeylElement operator*(const WeylElement& a, const WeylElement& b) {
        WeylElement r;
        for (int i = 0; i < 3; ++i) r.perm[i] = a.perm[b.perm[i]];
        return r;
    }

    WeylElement inverse() const {
        WeylElement r;
        for (int i = 0; i < 3; ++i) r.perm[perm[i]] = i;
        return r;
    }

    // Coxeter length = inversion count; 3 = longest element = opposition.
    int length() const {
        int inv = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                if (perm[i] > perm[j]) ++inv;
        return inv;
    }

    template <class T>
    std::array<T, 3> apply(const std::array<T, 3>& v) const {
        std::array<T, 3> r;
        for (int i = 0; i < 3; ++i) r[perm[i]] = v[i];
        return r;
    }

    bool operator==(const WeylElement&) const = default;
};

inline std::vector<WeylElement> all_weyl_elements() {
    std::vector<WeylElement> ws;
    std::array<int, 3> p{0, 1, 2};
    do {
        ws.push_back(WeylElement{p});
    } while (std::next_permutation(p.begin(), p.end()));
    return ws;
}

// A point of the dominant cone: coordinates decreasing, summing to zero.
struct TypeVector {
    std::array<Rat, 3> coords{Rat(0), Rat(0), Rat(0)};

    bool operator==(const TypeVector&) const = default;

    Rat norm_sq() const {
        return coords[0] * coords[0] + coords[1] * coords[1] + coords[2] * coords[2];
    }
    double norm() const { return std::sqrt(static_cast<double>(norm_sq())); }
    bool is_zero() const { return coords[0] == 0 && coords[1] == 0 && coords[2] == 0; }
};

inline Rat dot(const std::array<Rat, 3>& a, const std::array<Rat, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline Rat norm_sq(const std::array<Rat, 3>& a) { return dot(a, a); }

inline std::array<Rat, 3> sub(const std::array<Rat, 3>& a, const std::array<Rat, 3>& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

// Sorts a sum-zero triple into the dominant cone; also reports the
// permutation w with w(v) dominant (ties resolved toward the identity).
inline std::pair<TypeVector, WeylElement> dominance_project_with_witness(
    const std::array<Rat, 3>& v) {
    if (v[0] + v[1] + v[2] != 0)
        fail(errc::invalid_vector, "coordinate sum must be zero");
    std::array<int, 3> idx{0, 1, 2};
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] > v[b]; });
    TypeVector t;
    WeylElement w;
    for (int slot = 0; slot < 3; ++slot) {
        t.coords[slot] = v[idx[slot]];
        w.perm[idx[slot]] = slot;
    }
    return {t, w};
}

inline TypeVector dominance_project(const std::array<Rat, 3>& v) {
    return dominance_project_with_witness(v).first;
}

struct RootPairings {
    Rat a1;  // lambda1 - lambda2
    Rat a2;  // lambda2 - lambda3
    bool regular;  // both strictly positive
};

inline RootPairings root_pairings(const TypeVector& lambda) {
    RootPairings r;
    r.a1 = lambda.coords[0] - lambda.coords[1];
    r.a2 = lambda.coords[1] - lambda.coords[2];
    r.regular = r.a1 > 0 && r.a2 > 0;
    return r;
}

// iota(lambda) = w0(-lambda): negate and reverse, again dominant.
inline TypeVector opposition_involution(const TypeVector& lambda) {
    TypeVector r;
    r.coords[0] = -lambda.coords[2];
    r.coords[1] = -lambda.coords[1];
    r.coords[2] = -lambda.coords[0];
    return r;
}

enum class SeparationFormula {
    // min over w != 1 of ||lambda - w lambda|| / ||lambda||, the chord ratio
    // 2 sin(angle/2). Vanishes exactly on the Weyl walls.
    ChordRatio,
    // The displayed form min over w != 1 of 2 sin(angle(lambda, w lambda)),
    // kept for comparison; it degenerates at angle pi.
    PlainSine,
};

// Exact square of the chord-ratio separation constant.
inline Rat separation_constant_sq(const TypeVector& lambda) {
    if (lambda.is_zero()) fail(errc::zero_vector, "separation constant of zero vector");
    Rat nsq = lambda.norm_sq();
    bool first = true;
    Rat best;
    for (const auto& w : all_weyl_elements()) {
        if (w == WeylElement::identity()) continue;
        Rat chord = norm_sq(sub(lambda.coords, w.apply(lambda.coords)));
        Rat ratio = chord / nsq;
        if (first || ratio < best) {
            best = ratio;
            first = false;
        }
    }
    return best;
}

inline double separation_constant(const TypeVector& lambda,
                                  SeparationFormula formula = SeparationFormula::ChordRatio) {
    if (formula == SeparationFormula::ChordRatio)
        return std::sqrt(static_cast<double>(separation_constant_sq(lambda)));
    if (lambda.is_zero()) fail(errc::zero_vector, "separation constant of zero vector");
    double nsq = static_cast<double>(lambda.norm_sq());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& w : all_weyl_elements()) {
        if (w == WeylElement::identity()) continue;
        double c = static_cast<double>(dot(lambda.coords, w.apply(lambda.coords))) / nsq;
        c = std::clamp(c, -1.0, 1.0);
        best = std::min(best, 2.0 * std::sin(std::acos(c)));
    }
    return best;
}

// Finite-n diagnostics of lambda-regularity: the terminal direction estimate,
// per-step direction residuals and the largest step/n ratio over the second
// half. Thresholds live in the callers, not here.
struct RegularityReport {
    TypeVector lambda_hat;
    std::vector<double> direction_residuals;
    double max_step_ratio = 0.0;
};

inline RegularityReport regularity_diagnostics(const std::vector<TypeVector>& types,
                                               const std::vector<double>& steps) {
    if (types.empty()) fail(errc::empty_trajectory, "no type samples");
    const std::size_t n = types.size();
    RegularityReport rep;
    for (int c = 0; c < 3; ++c)
        rep.lambda_hat.coords[c] = types[n - 1].coords[c] / Rat(static_cast<long>(n));
    rep.direction_residuals.reserve(n);
    for (std::size_t k = 1; k <= n; ++k) {
        std::array<Rat, 3> dir;
        for (int c = 0; c < 3; ++c)
            dir[c] = types[k - 1].coords[c] / Rat(static_cast<long>(k)) - rep.lambda_hat.coords[c];
        rep.direction_residuals.push_back(std::sqrt(static_cast<double>(norm_sq(dir))));
    }
    for (std::size_t k = 1; k <= steps.size(); ++k) {
        if (2 * k < steps.size()) continue;
        rep.max_step_ratio = std::max(rep.max_step_ratio, steps[k - 1] / static_cast<double>(k));
    }
    return rep;
}

}  // namespace a2walk
