#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>

#include "a2walk/errors.hpp"
#include "a2walk/numeric.hpp"

namespace a2walk {

// Small dense matrix over the exact rationals. Everything downstream is 3x3
// (group elements, lattice bases) or 2x2 (panel-tree quotients).
template <std::size_t N>
struct Mat {
    std::array<std::array<Rat, N>, N> a{};

    static Mat identity() {
        Mat m;
        for (std::size_t i = 0; i < N; ++i) m.a[i][i] = 1;
        return m;
    }

    Rat& operator()(std::size_t i, std::size_t j) { return a[i][j]; }
    const Rat& operator()(std::size_t i, std::size_t j) const { return a[i][j]; }

    bool operator==(const Mat&) const = default;

    friend Mat operator*(const Mat& x, const Mat& y) {
        Mat r;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < N; ++k) {
                if (x.a[i][k] == 0) continue;
                for (std::size_t j = 0; j < N; ++j) {
                    if (y.a[k][j] == 0) continue;
                    r.a[i][j] += x.a[i][k] * y.a[k][j];
                }
            }
        return r;
    }

    friend Mat operator*(const Rat& c, const Mat& x) {
        Mat r;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) r.a[i][j] = c * x.a[i][j];
        return r;
    }

    std::array<Rat, N> col(std::size_t j) const {
        std::array<Rat, N> c;
        for (std::size_t i = 0; i < N; ++i) c[i] = a[i][j];
        return c;
    }

    std::array<Rat, N> row(std::size_t i) const { return a[i]; }

    std::array<Rat, N> apply(const std::array<Rat, N>& v) const {
        std::array<Rat, N> r{};
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) r[i] += a[i][j] * v[j];
        return r;
    }

    // Row covector times matrix.
    std::array<Rat, N> apply_left(const std::array<Rat, N>& v) const {
        std::array<Rat, N> r{};
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t i = 0; i < N; ++i) r[j] += v[i] * a[i][j];
        return r;
    }

    Mat transpose() const {
        Mat r;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) r.a[j][i] = a[i][j];
        return r;
    }
};

using Mat2 = Mat<2>;
using Mat3 = Mat<3>;

inline Rat det(const Mat2& m) { return m.a[0][0] * m.a[1][1] - m.a[0][1] * m.a[1][0]; }

inline Rat det(const Mat3& m) {
    return m.a[0][0] * (m.a[1][1] * m.a[2][2] - m.a[1][2] * m.a[2][1]) -
           m.a[0][1] * (m.a[1][0] * m.a[2][2] - m.a[1][2] * m.a[2][0]) +
           m.a[0][2] * (m.a[1][0] * m.a[2][1] - m.a[1][1] * m.a[2][0]);
}

inline Mat2 adjugate(const Mat2& m) {
    Mat2 r;
    r.a[0][0] = m.a[1][1];
    r.a[0][1] = -m.a[0][1];
    r.a[1][0] = -m.a[1][0];
    r.a[1][1] = m.a[0][0];
    return r;
}

inline Mat3 adjugate(const Mat3& m) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
            int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
            r.a[i][j] = m.a[r0][c0] * m.a[r1][c1] - m.a[r0][c1] * m.a[r1][c0];
        }
    return r;
}

template <std::size_t N>
inline Mat<N> inverse(const Mat<N>& m) {
    Rat d = det(m);
    if (d == 0) fail(errc::singular_matrix, "inverse of singular matrix");
    return Rat(1) / d * adjugate(m);
}

template <std::size_t N>
inline Mat<N> make_mat(std::initializer_list<std::initializer_list<Rat>> rows) {
    Mat<N> m;
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (const auto& x : row) m.a[i][j++] = x;
        ++i;
    }
    return m;
}

inline Mat3 mat3(std::initializer_list<std::initializer_list<Rat>> rows) {
    return make_mat<3>(rows);
}
inline Mat2 mat2(std::initializer_list<std::initializer_list<Rat>> rows) {
    return make_mat<2>(rows);
}

inline Mat3 diag3(const Rat& x, const Rat& y, const Rat& z) {
    Mat3 m;
    m.a[0][0] = x;
    m.a[1][1] = y;
    m.a[2][2] = z;
    return m;
}

inline Mat2 diag2(const Rat& x, const Rat& y) {
    Mat2 m;
    m.a[0][0] = x;
    m.a[1][1] = y;
    return m;
}

// Minimum valuation over all entries; nullopt for the zero matrix.
template <std::size_t N>
inline Val min_entry_valuation(const Mat<N>& m, long p) {
    Val best;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) best = val_min(best, valuation(m.a[i][j], p));
    return best;
}

template <std::size_t N>
inline bool is_p_integral(const Mat<N>& m, long p) {
    Val v = min_entry_valuation(m, p);
    return !v || *v >= 0;
}

// p-unimodular = p-integral with unit determinant: a change of lattice basis.
template <std::size_t N>
inline bool is_p_unimodular(const Mat<N>& m, long p) {
    return is_p_integral(m, p) && is_p_unit(det(m), p);
}

}  // namespace a2walk
