#pragma once

// Panel trees at vertices at infinity. For a type-1 vertex u (a line), T_u is
// the tree of lattice classes in the 2-dimensional quotient V/<u>, with unit
// edge lengths; its ends biject with the residue chambers containing u. A
// type-2 vertex (a plane) is handled by dualizing, with no separate code path.
//
// Tree points may sit on edge interiors (barycenters and circumcenters land
// on midpoints), so a point is an edge pair plus a rational offset.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "a2walk/building.hpp"
#include "a2walk/decompositions.hpp"
#include "a2walk/errors.hpp"
#include "a2walk/matrix.hpp"
#include "a2walk/numeric.hpp"

namespace a2walk {

inline std::array<Int, 2> canonical_primitive2(const std::array<Rat, 2>& v) {
    Int l = lcm(denominator(v[0]), denominator(v[1]));
    std::array<Int, 2> w{numerator(v[0] * Rat(l)), numerator(v[1] * Rat(l))};
    Int g = gcd(w[0], w[1]);
    if (g == 0) fail(errc::invalid_argument, "no direction from the zero vector");
    int lead = w[0] == 0 ? 1 : 0;
    if (w[lead] < 0) g = -g;
    w[0] /= g;
    w[1] /= g;
    return w;
}

struct TreeVertex {
    Mat2 canon;

    static TreeVertex base() { return {Mat2::identity()}; }
    bool operator==(const TreeVertex&) const = default;
};

inline bool mat_less(const Mat2& x, const Mat2& y) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            if (x.a[i][j] != y.a[i][j]) return x.a[i][j] < y.a[i][j];
        }
    return false;
}

inline bool operator<(const TreeVertex& a, const TreeVertex& b) { return mat_less(a.canon, b.canon); }

// End of the tree: a line in the quotient plane, primitive representative.
struct TreeEnd {
    std::array<Int, 2> rep;

    static TreeEnd make(const std::array<Rat, 2>& dir) { return {canonical_primitive2(dir)}; }
    bool operator==(const TreeEnd&) const = default;
    bool operator<(const TreeEnd& o) const {
        if (rep[0] != o.rep[0]) return rep[0] < o.rep[0];
        return rep[1] < o.rep[1];
    }
};

inline long tree_distance(const TreeVertex& a, const TreeVertex& b, long p) {
    if (a == b) return 0;
    auto v = smith_valuations_by_minors(inverse(a.canon) * b.canon, p);
    return v[1] - v[0];  // exponent spread is homothety-invariant
}

// t-th vertex on the geodesic [a, b], 0 <= t <= d(a,b), via an adapted basis
// from the relative Smith decomposition.
inline TreeVertex vertex_on_geodesic(const TreeVertex& a, const TreeVertex& b, long t, long p) {
    if (t == 0 || a == b) {
        if (t == 0) return a;
        fail(errc::invalid_argument, "geodesic parameter out of range");
    }
    auto s = smith_decompose(inverse(a.canon) * b.canon, p);
    long d = s.valuations[1] - s.valuations[0];
    if (t < 0 || t > d) fail(errc::invalid_argument, "geodesic parameter out of range");
    Mat2 f = a.canon * s.U;
    Mat2 step = f * diag2(1, pow_rat(p, t));
    return TreeVertex{hermite_canonical(step, p)};
}

// A point of the tree: a vertex, or an interior point of the unit edge
// (anchor, toward) at rational offset in (0,1). Canonical, so equality is
// structural.
struct TreePoint {
    TreeVertex anchor;
    TreeVertex toward;
    Rat offset;

    static TreePoint at_vertex(const TreeVertex& v) { return {v, v, Rat(0)}; }

    bool is_vertex() const { return offset == 0; }

    bool operator==(const TreePoint&) const = default;
    bool operator<(const TreePoint& o) const {
        if (!(anchor == o.anchor)) return anchor < o.anchor;
        if (!(toward == o.toward)) return toward < o.toward;
        return offset < o.offset;
    }
};

inline Int floor_rat(const Rat& q) {
    Int n = numerator(q), d = denominator(q);
    Int r;
    mpz_fdiv_q(r.backend().data(), n.backend().data(), d.backend().data());
    return r;
}

inline long ceil_rat_long(const Rat& q) {
    return static_cast<long>(Int(-floor_rat(-q)));
}

// Point at distance t from a along [a, b], canonicalized.
inline TreePoint point_on_vertex_path(const TreeVertex& a, const TreeVertex& b, const Rat& t,
                                      long p) {
    long c = static_cast<long>(Int(floor_rat(t)));
    if (Rat(c) == t) return TreePoint::at_vertex(vertex_on_geodesic(a, b, c, p));
    TreeVertex lo = vertex_on_geodesic(a, b, c, p);
    TreeVertex hi = vertex_on_geodesic(a, b, c + 1, p);
    Rat f = t - Rat(c);
    if (hi < lo) {
        std::swap(lo, hi);
        f = 1 - f;
    }
    return TreePoint{lo, hi, f};
}

inline Rat point_vertex_distance(const TreePoint& x, const TreeVertex& w, long p) {
    Rat da = Rat(tree_distance(x.anchor, w, p));
    if (x.is_vertex()) return da;
    Rat db = Rat(tree_distance(x.toward, w, p));
    Rat s = (Rat(1) + da - db) / 2;  // position of w's projection on the edge
    return abs(x.offset - s) + da - s;
}

inline Rat tree_distance(const TreePoint& x, const TreePoint& y, long p) {
    if (y.is_vertex()) return point_vertex_distance(x, y.anchor, p);
    Rat da = point_vertex_distance(x, y.anchor, p);
    Rat db = point_vertex_distance(x, y.toward, p);
    Rat s = (Rat(1) + da - db) / 2;
    return abs(y.offset - s) + da - s;
}

// Point at distance t from x along [x, y]; anchors the result on bracketing
// vertices of the underlying edge path.
inline TreePoint point_on_path(const TreePoint& x, const TreePoint& y, const Rat& t, long p) {
    Rat dxy = tree_distance(x, y, p);
    if (t < 0 || t > dxy) fail(errc::invalid_argument, "path parameter out of range");
    if (t == 0) return x;
    if (t == dxy) return y;
    auto behind = [&](const TreePoint& pt, const TreePoint& other) -> TreeVertex {
        if (pt.is_vertex()) return pt.anchor;
        // One endpoint of pt's edge lies behind pt relative to other.
        Rat d_anchor = tree_distance(TreePoint::at_vertex(pt.anchor), other, p);
        Rat d_pt = tree_distance(pt, other, p);
        if (d_anchor == pt.offset + d_pt) return pt.anchor;
        return pt.toward;
    };
    TreeVertex vx = behind(x, y);
    TreeVertex vy = behind(y, x);
    Rat lead = point_vertex_distance(x, vx, p);
    return point_on_vertex_path(vx, vy, lead + t, p);
}

// Direction vector of c made primitive inside the lattice of v.
inline std::array<Rat, 2> primitive_in_lattice(const TreeVertex& v, const TreeEnd& c, long p) {
    Mat2 inv = inverse(v.canon);
    std::array<Rat, 2> z = inv.apply({Rat(c.rep[0]), Rat(c.rep[1])});
    Val k = val_min(valuation(z[0], p), valuation(z[1], p));
    Rat scale = pow_rat(p, -*k);
    auto w = v.canon.apply({z[0] * scale, z[1] * scale});
    return w;
}

// K-th vertex on the ray [v -> c): the class of Z c' + p^K (lattice of v).
inline TreeVertex ray_vertex(const TreeVertex& v, const TreeEnd& c, long k, long p) {
    if (k == 0) return v;
    auto cprim = primitive_in_lattice(v, c, p);
    Rat pk = pow_rat(p, k);
    std::vector<std::array<Rat, 2>> gens{
        cprim,
        {v.canon.a[0][0] * pk, v.canon.a[1][0] * pk},
        {v.canon.a[0][1] * pk, v.canon.a[1][1] * pk},
    };
    return TreeVertex{hermite_canonical_from_generators<2>(gens, p)};
}

inline TreeVertex neighbor_toward_end(const TreeVertex& v, const TreeEnd& c, long p) {
    return ray_vertex(v, c, 1, p);
}

// Gromov product (C|D)_xi; nullopt encodes +infinity (C = D). At the base
// vertex this is v_p(det [c d]); general base points follow by measuring
// against far points on the two rays.
inline std::optional<Rat> gromov_product(const TreePoint& xi, const TreeEnd& c, const TreeEnd& d,
                                         long p) {
    if (c == d) return std::nullopt;
    Int det_cd = c.rep[0] * d.rep[1] - c.rep[1] * d.rep[0];
    long m = int_valuation(det_cd, p);
    TreeVertex base = TreeVertex::base();
    long reach = m + ceil_rat_long(point_vertex_distance(xi, base, p)) + 2;
    TreeVertex a = ray_vertex(base, c, reach, p);
    TreeVertex b = ray_vertex(base, d, reach, p);
    Rat da = point_vertex_distance(xi, a, p);
    Rat db = point_vertex_distance(xi, b, p);
    Rat dab = Rat(tree_distance(a, b, p));
    return (da + db - dab) / 2;
}

// d_{u,xi}(C, D) = exp(-(C|D)_xi); an honest metric on the ends.
inline double end_metric(const TreePoint& xi, const TreeEnd& c, const TreeEnd& d, long p) {
    auto g = gromov_product(xi, c, d, p);
    if (!g) return 0.0;
    return std::exp(-static_cast<double>(*g));
}

namespace detail {

inline Rat barycenter_energy(const TreePoint& x, const std::vector<TreeEnd>& ends, long p) {
    Rat sum = 0;
    for (std::size_t i = 0; i < ends.size(); ++i)
        for (std::size_t j = i + 1; j < ends.size(); ++j) {
            auto g = gromov_product(x, ends[i], ends[j], p);
            sum += *g;  // ends are pairwise distinct
        }
    return sum;
}

}  // namespace detail

// Barycenter of n >= 3 distinct ends: the circumcenter (midpoint of the
// diametral pair) of the argmin of F_S(x) = sum of pairwise Gromov products.
// F_S is convex with integer slopes, every descent direction points at an end
// of S, so integer steepest descent from the base vertex reaches the argmin.
inline TreePoint bary_ends(const std::vector<TreeEnd>& ends_in, long p) {
    if (ends_in.size() < 3) fail(errc::invalid_end_set, "need at least 3 ends");
    std::vector<TreeEnd> ends = ends_in;
    std::sort(ends.begin(), ends.end());
    for (std::size_t i = 1; i < ends.size(); ++i)
        if (ends[i] == ends[i - 1]) fail(errc::invalid_end_set, "ends must be pairwise distinct");

    auto energy = [&](const TreeVertex& v) {
        return detail::barycenter_energy(TreePoint::at_vertex(v), ends, p);
    };

    TreeVertex cur = TreeVertex::base();
    Rat fcur = energy(cur);
    for (;;) {
        TreeVertex best = cur;
        Rat fbest = fcur;
        for (const auto& c : ends) {
            TreeVertex n = neighbor_toward_end(cur, c, p);
            Rat fn = energy(n);
            if (fn < fbest) {
                fbest = fn;
                best = n;
            }
        }
        if (fbest == fcur) break;
        cur = best;
        fcur = fbest;
    }

    // Flood the plateau; the argmin of a convex integer-sloped function is a
    // finite subtree whose leaves only extend toward ends of S.
    std::set<TreeVertex> argmin{cur};
    std::vector<TreeVertex> frontier{cur};
    while (!frontier.empty()) {
        std::vector<TreeVertex> next;
        for (const auto& v : frontier)
            for (const auto& c : ends) {
                TreeVertex n = neighbor_toward_end(v, c, p);
                if (argmin.count(n)) continue;
                if (energy(n) == fcur) {
                    argmin.insert(n);
                    next.push_back(n);
                }
            }
        frontier = std::move(next);
        if (argmin.size() > 4096) fail(errc::invalid_argument, "argmin plateau unexpectedly large");
    }

    std::vector<TreeVertex> pts(argmin.begin(), argmin.end());
    long diam = 0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            long d = tree_distance(pts[i], pts[j], p);
            if (d > diam) {
                diam = d;
                ia = i;
                ib = j;
            }
        }
    if (diam == 0) return TreePoint::at_vertex(pts[0]);
    return point_on_vertex_path(pts[ia], pts[ib], Rat(diam, 2), p);
}

// Finitely supported measures.
using TreePointMeasure = std::vector<std::pair<TreePoint, Rat>>;
using TreeEndMeasure = std::vector<std::pair<TreeEnd, Rat>>;

namespace detail {

// Merge duplicate atoms and normalize to mass one.
inline TreePointMeasure normalize_measure(const TreePointMeasure& nu) {
    std::map<TreePoint, Rat> acc;
    Rat total = 0;
    for (const auto& [pt, w] : nu) {
        if (w <= 0) fail(errc::invalid_argument, "weights must be positive");
        acc[pt] += w;
        total += w;
    }
    if (acc.empty()) fail(errc::empty_measure, "empty support");
    TreePointMeasure out;
    for (auto& [pt, w] : acc) out.emplace_back(pt, w / total);
    return out;
}

}  // namespace detail

// Concentration barycenter beta_eps: R_{xi,eps} is the smallest closed-ball
// radius at xi holding mass > 1-eps; the returned point is the circumcenter
// of the closure of { R_{xi,eps} < R_eps + 1 } within the convex hull of the
// support (which contains the minimizing set).
inline TreePoint beta_eps(const TreePointMeasure& nu_in, const Rat& eps, long p) {
    if (eps <= 0 || eps >= Rat(1, 2)) fail(errc::invalid_epsilon, "need 0 < eps < 1/2");
    TreePointMeasure nu = detail::normalize_measure(nu_in);
    const std::size_t n = nu.size();
    if (n == 1) return nu[0].first;

    std::vector<TreePoint> pt(n);
    std::vector<Rat> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        pt[i] = nu[i].first;
        w[i] = nu[i].second;
    }
    std::vector<std::vector<Rat>> dist(n, std::vector<Rat>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] = tree_distance(pt[i], pt[j], p);

    // Distances from the point at parameter t on [pt[i], pt[j]] to every atom.
    struct Linear {
        Rat kink;   // projection parameter of the atom on the segment
        Rat base;   // distance at the kink
    };
    auto atom_profiles = [&](std::size_t i, std::size_t j) {
        std::vector<Linear> prof(n);
        for (std::size_t m = 0; m < n; ++m) {
            Rat s = (dist[i][j] + dist[i][m] - dist[j][m]) / 2;
            prof[m] = Linear{s, dist[i][m] - s};
        }
        return prof;
    };
    auto radius_at = [&](const std::vector<Linear>& prof, const Rat& t) {
        std::vector<std::pair<Rat, Rat>> dw(n);  // (distance, weight)
        for (std::size_t m = 0; m < n; ++m) dw[m] = {abs(t - prof[m].kink) + prof[m].base, w[m]};
        std::sort(dw.begin(), dw.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        Rat mass = 0;
        const Rat need = 1 - eps;
        for (const auto& [d, ww] : dw) {
            mass += ww;
            if (mass > need) return d;
        }
        return dw.back().first;
    };

    // Candidate parameters on a segment: endpoints, kinks, pairwise crossings.
    auto candidates_on = [&](std::size_t i, std::size_t j, const std::vector<Linear>& prof) {
        std::set<Rat> ts{Rat(0), dist[i][j]};
        for (std::size_t m = 0; m < n; ++m)
            if (prof[m].kink >= 0 && prof[m].kink <= dist[i][j]) ts.insert(prof[m].kink);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                // |t-ka|+ca = |t-kb|+cb on each sign regime
                const Rat &ka = prof[a].kink, &ca = prof[a].base;
                const Rat &kb = prof[b].kink, &cb = prof[b].base;
                for (int sa = -1; sa <= 1; sa += 2)
                    for (int sb = -1; sb <= 1; sb += 2) {
                        Rat denom = Rat(sa) - Rat(sb);
                        if (denom == 0) continue;
                        Rat t = (cb - ca + Rat(sa) * ka - Rat(sb) * kb) / denom;
                        if (t < 0 || t > dist[i][j]) continue;
                        ts.insert(t);
                    }
            }
        return std::vector<Rat>(ts.begin(), ts.end());
    };

    // Global minimum of R over the hull (union of pairwise segments).
    std::optional<Rat> rmin;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            auto prof = atom_profiles(i, j);
            for (const auto& t : candidates_on(i, j, prof)) {
                Rat r = radius_at(prof, t);
                if (!rmin || r < *rmin) rmin = r;
            }
        }

    const Rat cutoff = *rmin + 1;
    // Closure of the sublevel set within the hull: closed subsegments where
    // R <= cutoff between consecutive candidates (R is linear in between).
    std::vector<TreePoint> extremes;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            auto prof = atom_profiles(i, j);
            auto ts = candidates_on(i, j, prof);
            for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
                Rat t0 = ts[k], t1 = ts[k + 1];
                Rat r0 = radius_at(prof, t0), r1 = radius_at(prof, t1);
                const bool in0 = r0 < cutoff, in1 = r1 < cutoff;
                if (!in0 && !in1) continue;
                Rat lo = t0, hi = t1;
                if (!in0) lo = t0 + (t1 - t0) * (r0 - cutoff) / (r0 - r1);
                if (!in1) hi = t0 + (t1 - t0) * (r0 - cutoff) / (r0 - r1);
                extremes.push_back(point_on_path(pt[i], pt[j], lo, p));
                extremes.push_back(point_on_path(pt[i], pt[j], hi, p));
            }
        }

    // Circumcenter: midpoint of a diametral pair of the closed set.
    Rat diam = 0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t a = 0; a < extremes.size(); ++a)
        for (std::size_t b = a + 1; b < extremes.size(); ++b) {
            Rat d = tree_distance(extremes[a], extremes[b], p);
            if (d > diam) {
                diam = d;
                ia = a;
                ib = b;
            }
        }
    if (diam == 0) return extremes.front();
    return point_on_path(extremes[ia], extremes[ib], diam / 2, p);
}

// Pushforward of an atomic end measure through the triple barycenter:
// nu x nu x nu restricted to pairwise-distinct triples, renormalized.
inline TreePointMeasure measure_pushforward(const TreeEndMeasure& nu, long p) {
    std::map<TreeEnd, Rat> atoms;
    for (const auto& [e, w] : nu) {
        if (w <= 0) fail(errc::invalid_argument, "weights must be positive");
        atoms[e] += w;
    }
    if (atoms.size() < 3) fail(errc::too_few_atoms, "need at least 3 distinct end atoms");
    std::vector<TreeEnd> es;
    std::vector<Rat> ws;
    for (auto& [e, w] : atoms) {
        es.push_back(e);
        ws.push_back(w);
    }
    std::map<TreePoint, Rat> out;
    Rat total = 0;
    const std::size_t n = es.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                Rat weight = 6 * ws[i] * ws[j] * ws[k];  // ordered distinct triples
                TreePoint b = bary_ends({es[i], es[j], es[k]}, p);
                out[b] += weight;
                total += weight;
            }
    TreePointMeasure result;
    for (auto& [ptv, wv] : out) result.emplace_back(ptv, wv / total);
    return result;
}

// ----- the 3D plumbing: projections and the ends <-> residue bijection -----

class PanelTree {
public:
    static PanelTree for_line(const std::array<Int, 3>& u, long p) {
        return PanelTree(canonical_primitive(to_rat(u)), p, false);
    }
    static PanelTree for_plane(const std::array<Int, 3>& plane_cov, long p) {
        return PanelTree(canonical_primitive(to_rat(plane_cov)), p, true);
    }

    long prime() const { return p_; }
    bool dual() const { return dual_; }
    const std::array<Int, 3>& direction() const { return u_; }

    // pi_u: image of the lattice of x in V/<u>, canonicalized.
    TreeVertex project(const BuildingVertex& x) const {
        Mat3 basis = dual_ ? adjugate(x.canon).transpose() : x.canon;
        std::vector<std::array<Rat, 2>> gens;
        gens.reserve(3);
        for (int j = 0; j < 3; ++j) {
            auto z = frame_inv_.apply(basis.col(j));
            gens.push_back({z[1], z[2]});
        }
        return TreeVertex{hermite_canonical_from_generators<2>(gens, p_)};
    }

    // phi_u: residue chamber containing u -> end of T_u (image of the plane).
    TreeEnd end_from_chamber(const Flag& c) const {
        Flag f = dual_ ? dualize(c) : c;
        if (f.line != u_) fail(errc::not_in_residue, "chamber does not contain the vertex at infinity");
        std::array<Int, 3> v = cross(f.plane, f.line);
        auto z = frame_inv_.apply(to_rat(v));
        return TreeEnd::make({z[1], z[2]});
    }

    // Inverse bijection: the unique flag (u, plane) with plane/<u> the end.
    Flag chamber_from_end(const TreeEnd& e) const {
        std::array<Rat, 3> lift = frame_.apply({Rat(0), Rat(e.rep[0]), Rat(e.rep[1])});
        std::array<Int, 3> v = canonical_primitive(lift);
        Flag f = Flag::make(to_rat(u_), to_rat(cross(u_, v)));
        return dual_ ? dualize(f) : f;
    }

    // Matrix of the action induced on V/<u> by g (which must fix <u>).
    Mat2 induced_action(const Mat3& g) const {
        Mat3 h = dual_ ? adjugate(g).transpose() : g;
        Mat3 m = frame_inv_ * h * frame_;
        if (m.a[1][0] != 0 || m.a[2][0] != 0)
            fail(errc::invalid_argument, "element does not fix the vertex at infinity");
        Mat2 r;
        r.a[0][0] = m.a[1][1];
        r.a[0][1] = m.a[1][2];
        r.a[1][0] = m.a[2][1];
        r.a[1][1] = m.a[2][2];
        return r;
    }

private:
    PanelTree(std::array<Int, 3> u, long p, bool dual) : u_(u), p_(p), dual_(dual) {
        int lead = -1;
        for (int i = 0; i < 3 && lead < 0; ++i)
            if (u_[i] % p != 0) lead = i;
        if (lead < 0) fail(errc::invalid_argument, "direction not primitive mod p");
        for (int i = 0; i < 3; ++i) frame_.a[i][0] = Rat(u_[i]);
        int col = 1;
        for (int j = 0; j < 3; ++j) {
            if (j == lead) continue;
            frame_.a[j][col] = 1;
            ++col;
        }
        frame_inv_ = inverse(frame_);
    }

    static Flag dualize(const Flag& f) { return Flag{f.plane, f.line}; }

    std::array<Int, 3> u_;
    Mat3 frame_;
    Mat3 frame_inv_;
    long p_;
    bool dual_;
};

inline TreeVertex apply_tree(const Mat2& g, const TreeVertex& v, long p) {
    return TreeVertex{hermite_canonical(g * v.canon, p)};
}

inline TreeEnd apply_tree(const Mat2& g, const TreeEnd& e, long p) {
    (void)p;
    return TreeEnd::make(g.apply({Rat(e.rep[0]), Rat(e.rep[1])}));
}

inline TreePoint apply_tree(const Mat2& g, const TreePoint& x, long p) {
    if (x.is_vertex()) return TreePoint::at_vertex(apply_tree(g, x.anchor, p));
    TreeVertex a = apply_tree(g, x.anchor, p);
    TreeVertex b = apply_tree(g, x.toward, p);
    Rat f = x.offset;
    if (b < a) {
        std::swap(a, b);
        f = 1 - f;
    }
    return TreePoint{a, b, f};
}

}  // namespace a2walk
