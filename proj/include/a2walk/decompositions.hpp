#pragma once

// Exact matrix decompositions over the localization Z_(p) = {a/b : p does not
// divide b}. Working in Z_(p) rather than truncated p-adics keeps every
// valuation exact; there is no precision management anywhere in this module.
//
//   smith_decompose    M = U diag(p^v) V,  U,V p-unimodular, v increasing
//   iwasawa_decompose  M = K diag(p^b) N,  K p-unimodular, N upper-unipotent
//   hermite_canonical  canonical integer basis of the lattice class of M
//
// Because Z_(p) has a single prime, a min-valuation pivot divides the rest of
// the submatrix, so each elimination needs one pass (no gcd loops).

#include <array>
#include <cstddef>
#include <vector>

#include "a2walk/errors.hpp"
#include "a2walk/matrix.hpp"
#include "a2walk/numeric.hpp"

namespace a2walk {

enum class PivotOrder { RowMajor, ColMajor };

template <std::size_t N>
struct SmithDecomposition {
    Mat<N> U;
    std::array<long, N> valuations{};
    Mat<N> V;
};

template <std::size_t N>
SmithDecomposition<N> smith_decompose(const Mat<N>& m, long p,
                                      PivotOrder ties = PivotOrder::RowMajor) {
    if (det(m) == 0) fail(errc::singular_matrix, "smith_decompose: singular input");
    SmithDecomposition<N> out;
    out.U = Mat<N>::identity();
    out.V = Mat<N>::identity();
    Mat<N> A = m;

    for (std::size_t k = 0; k < N; ++k) {
        // Min-valuation pivot in the trailing submatrix.
        std::size_t pi = k, pj = k;
        Val best;
        auto consider = [&](std::size_t i, std::size_t j) {
            Val v = valuation(A.a[i][j], p);
            if (v && (!best || *v < *best)) {
                best = v;
                pi = i;
                pj = j;
            }
        };
        if (ties == PivotOrder::RowMajor) {
            for (std::size_t i = k; i < N; ++i)
                for (std::size_t j = k; j < N; ++j) consider(i, j);
        } else {
            for (std::size_t j = k; j < N; ++j)
                for (std::size_t i = k; i < N; ++i) consider(i, j);
        }
        if (!best) fail(errc::singular_matrix, "smith_decompose: zero block");

        if (pi != k) {
            std::swap(A.a[pi], A.a[k]);
            for (std::size_t i = 0; i < N; ++i) std::swap(out.U.a[i][pi], out.U.a[i][k]);
        }
        if (pj != k) {
            for (std::size_t i = 0; i < N; ++i) std::swap(A.a[i][pj], A.a[i][k]);
            std::swap(out.V.a[pj], out.V.a[k]);
        }

        // Clear below and to the right; multipliers lie in Z_(p) by pivot
        // minimality, so U and V stay p-unimodular.
        for (std::size_t i = k + 1; i < N; ++i) {
            if (A.a[i][k] == 0) continue;
            Rat q = A.a[i][k] / A.a[k][k];
            for (std::size_t j = k; j < N; ++j) A.a[i][j] -= q * A.a[k][j];
            for (std::size_t j = 0; j < N; ++j) out.U.a[j][k] += q * out.U.a[j][i];
        }
        for (std::size_t j = k + 1; j < N; ++j) {
            if (A.a[k][j] == 0) continue;
            Rat q = A.a[k][j] / A.a[k][k];
            for (std::size_t i = k; i < N; ++i) A.a[i][j] -= q * A.a[i][k];
            for (std::size_t i = 0; i < N; ++i) out.V.a[k][i] += q * out.V.a[j][i];
        }
    }

    // Fold the unit parts of the diagonal into V.
    for (std::size_t k = 0; k < N; ++k) {
        long v = valuation_nonzero(A.a[k][k], p);
        out.valuations[k] = v;
        Rat u = A.a[k][k] / pow_rat(p, v);
        for (std::size_t i = 0; i < N; ++i) out.V.a[k][i] *= u;
    }
    return out;
}

template <std::size_t N>
Mat<N> smith_diagonal(const SmithDecomposition<N>& s, long p) {
    Mat<N> d;
    for (std::size_t i = 0; i < N; ++i) d.a[i][i] = pow_rat(p, s.valuations[i]);
    return d;
}

// Independent route to the Smith valuations: v1 = min entry valuation,
// v1+v2 = min 2x2-minor valuation, and the determinant fixes the sum.
inline std::array<long, 3> smith_valuations_by_minors(const Mat3& m, long p) {
    Rat d = det(m);
    if (d == 0) fail(errc::singular_matrix, "minor oracle: singular input");
    Val v1 = min_entry_valuation(m, p);
    Val v12;
    for (int i0 = 0; i0 < 3; ++i0)
        for (int i1 = i0 + 1; i1 < 3; ++i1)
            for (int j0 = 0; j0 < 3; ++j0)
                for (int j1 = j0 + 1; j1 < 3; ++j1) {
                    Rat minor = m.a[i0][j0] * m.a[i1][j1] - m.a[i0][j1] * m.a[i1][j0];
                    v12 = val_min(v12, valuation(minor, p));
                }
    long vdet = valuation_nonzero(d, p);
    return {*v1, *v12 - *v1, vdet - *v12};
}

inline std::array<long, 2> smith_valuations_by_minors(const Mat2& m, long p) {
    Rat d = det(m);
    if (d == 0) fail(errc::singular_matrix, "minor oracle: singular input");
    Val v1 = min_entry_valuation(m, p);
    return {*v1, valuation_nonzero(d, p) - *v1};
}

struct IwasawaDecomposition {
    Mat3 K;                      // p-unimodular
    std::array<long, 3> b{};     // column filtration exponents
    Mat3 N;                      // upper-triangular unipotent
};

// M = K diag(p^b) N. The triple b is determined by the column-span
// filtration: b1 = min valuation of column 1, b1+b2 = min valuation of the
// 2x2 minors of columns {1,2}, b1+b2+b3 = v_p(det M).
inline IwasawaDecomposition iwasawa_decompose(const Mat3& m, long p) {
    if (det(m) == 0) fail(errc::singular_matrix, "iwasawa_decompose: singular input");
    IwasawaDecomposition out;
    Mat3 A = m;
    Mat3 Ninv = Mat3::identity();
    std::array<bool, 3> used{false, false, false};

    for (int j = 0; j < 3; ++j) {
        int pivot = -1;
        Val best;
        for (int i = 0; i < 3; ++i) {
            if (used[i]) continue;
            Val v = valuation(A.a[i][j], p);
            if (v && (!best || *v < *best)) {
                best = v;
                pivot = i;
            }
        }
        if (pivot < 0) fail(errc::singular_matrix, "iwasawa_decompose: dependent columns");
        used[pivot] = true;
        out.b[j] = *best;
        for (int l = j + 1; l < 3; ++l) {
            if (A.a[pivot][l] == 0) continue;
            Rat q = A.a[pivot][l] / A.a[pivot][j];
            for (int i = 0; i < 3; ++i) A.a[i][l] -= q * A.a[i][j];
            for (int i = 0; i < 3; ++i) Ninv.a[i][l] -= q * Ninv.a[i][j];
        }
    }

    for (int j = 0; j < 3; ++j) {
        Rat scale = pow_rat(p, -out.b[j]);
        for (int i = 0; i < 3; ++i) out.K.a[i][j] = A.a[i][j] * scale;
    }
    out.N = inverse(Ninv);
    return out;
}

namespace detail {

// Column elimination to lower-triangular form over Z_(p); shared by the
// square and generating-set Hermite routines. cols is the working set of
// column vectors, all p-integral with min valuation 0.
template <std::size_t R>
void hermite_reduce(std::vector<std::array<Rat, R>>& cols, long p) {
    for (std::size_t row = 0; row < R; ++row) {
        std::size_t pick = row;
        Val best;
        for (std::size_t j = row; j < cols.size(); ++j) {
            Val v = valuation(cols[j][row], p);
            if (v && (!best || *v < *best)) {
                best = v;
                pick = j;
            }
        }
        if (!best) fail(errc::singular_matrix, "hermite: rank-deficient generators");
        std::swap(cols[row], cols[pick]);
        for (std::size_t j = row + 1; j < cols.size(); ++j) {
            if (cols[j][row] == 0) continue;
            Rat q = cols[j][row] / cols[row][row];
            for (std::size_t i = row; i < R; ++i) cols[j][i] -= q * cols[row][i];
        }
    }
    cols.resize(R);
    // Unit-normalize the diagonal, then reduce the sub-diagonal entries
    // modulo the diagonal of their row, top row first.
    std::array<long, R> diag_exp;
    for (std::size_t i = 0; i < R; ++i) {
        diag_exp[i] = valuation_nonzero(cols[i][i], p);
        Rat u = pow_rat(p, diag_exp[i]) / cols[i][i];
        for (std::size_t r = 0; r < R; ++r) cols[i][r] *= u;
    }
    for (std::size_t i = 1; i < R; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            Int t = mod_p_power(cols[j][i], p, diag_exp[i]);
            Rat q = (cols[j][i] - Rat(t)) / pow_rat(p, diag_exp[i]);
            for (std::size_t r = 0; r < R; ++r) cols[j][r] -= q * cols[i][r];
        }
    }
}

}  // namespace detail

// Canonical representative of the homothety class of the lattice spanned by
// the columns: scale by the central p-power making the matrix p-integral and
// primitive, then take the lower-triangular column Hermite form (diagonal
// entries p-powers, sub-diagonal entries reduced modulo the diagonal of their
// row). Two bases agree here iff they span the same lattice up to p-powers.
template <std::size_t N>
Mat<N> hermite_canonical(const Mat<N>& m, long p) {
    if (det(m) == 0) fail(errc::singular_matrix, "hermite_canonical: singular input");
    Val vmin = min_entry_valuation(m, p);
    Rat scale = pow_rat(p, -*vmin);
    std::vector<std::array<Rat, N>> cols;
    for (std::size_t j = 0; j < N; ++j) {
        auto c = m.col(j);
        for (auto& x : c) x *= scale;
        cols.push_back(c);
    }
    detail::hermite_reduce<N>(cols, p);
    Mat<N> out;
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t i = 0; i < N; ++i) out.a[i][j] = cols[j][i];
    return out;
}

// Same canonical form from a generating set (k >= N columns, rank N).
template <std::size_t N>
Mat<N> hermite_canonical_from_generators(const std::vector<std::array<Rat, N>>& gens, long p) {
    Val vmin;
    for (const auto& g : gens)
        for (const auto& x : g) vmin = val_min(vmin, valuation(x, p));
    if (!vmin) fail(errc::singular_matrix, "hermite: zero generating set");
    Rat scale = pow_rat(p, -*vmin);
    std::vector<std::array<Rat, N>> cols;
    cols.reserve(gens.size());
    for (const auto& g : gens) {
        auto c = g;
        for (auto& x : c) x *= scale;
        cols.push_back(c);
    }
    if (cols.size() < N) fail(errc::singular_matrix, "hermite: too few generators");
    detail::hermite_reduce<N>(cols, p);
    Mat<N> out;
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t i = 0; i < N; ++i) out.a[i][j] = cols[j][i];
    return out;
}

}  // namespace a2walk
