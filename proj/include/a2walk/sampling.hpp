#pragma once

// Deterministic pseudo-random generation of test inputs: matrices with
// entries in {0, +-1, +-p, +-1/p}, det-1 elements by rejection, p-unimodular
// changes of basis as words in elementary operations. Shared by the CLI
// self-check and the test suites.

#include <vector>

#include "a2walk/building.hpp"
#include "a2walk/matrix.hpp"
#include "a2walk/numeric.hpp"
#include "a2walk/rng.hpp"

namespace a2walk {

inline Rat sparse_entry(PhiloxStream& rng, long p) {
    switch (rng.next_below(7)) {
        case 0: return Rat(0);
        case 1: return Rat(1);
        case 2: return Rat(-1);
        case 3: return Rat(p);
        case 4: return Rat(-p);
        case 5: return Rat(1, p);
        default: return Rat(-1, p);
    }
}

template <std::size_t N>
Mat<N> random_sparse_matrix(PhiloxStream& rng, long p) {
    Mat<N> m;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) m.a[i][j] = sparse_entry(rng, p);
    return m;
}

template <std::size_t N>
Mat<N> random_nonsingular(PhiloxStream& rng, long p) {
    for (;;) {
        Mat<N> m = random_sparse_matrix<N>(rng, p);
        if (det(m) != 0) return m;
    }
}

inline Mat3 random_det_one(PhiloxStream& rng, long p) {
    for (;;) {
        Mat3 m = random_sparse_matrix<3>(rng, p);
        if (det(m) == 1) return m;
    }
}

// Word of elementary p-integral transvections, permutations and unit scalings.
template <std::size_t N>
Mat<N> random_p_unimodular(PhiloxStream& rng, long p, int word_length = 8) {
    Mat<N> m = Mat<N>::identity();
    for (int w = 0; w < word_length; ++w) {
        switch (rng.next_below(3)) {
            case 0: {  // transvection with small p-integral coefficient
                std::size_t i = rng.next_below(N);
                std::size_t j = rng.next_below(N);
                if (i == j) break;
                long c = static_cast<long>(rng.next_below(2 * static_cast<std::uint64_t>(p) + 1)) -
                         static_cast<long>(p);
                Mat<N> e = Mat<N>::identity();
                e.a[i][j] = c;
                m = m * e;
                break;
            }
            case 1: {  // swap two rows (det -1 is still a p-unit)
                std::size_t i = rng.next_below(N);
                std::size_t j = rng.next_below(N);
                if (i == j) break;
                Mat<N> e;
                for (std::size_t k = 0; k < N; ++k) {
                    std::size_t t = k == i ? j : (k == j ? i : k);
                    e.a[k][t] = 1;
                }
                m = m * e;
                break;
            }
            default: {  // unit diagonal scaling prime to p
                std::size_t i = rng.next_below(N);
                long u = static_cast<long>(rng.next_below(static_cast<std::uint64_t>(p) - 1)) + 1;
                Mat<N> e = Mat<N>::identity();
                e.a[i][i] = u;
                m = m * e;
                break;
            }
        }
    }
    return m;
}

inline BuildingVertex random_vertex(PhiloxStream& rng, long p, int word_length = 6) {
    BuildingVertex v = BuildingVertex::standard();
    for (int w = 0; w < word_length; ++w) {
        Mat3 g = random_det_one(rng, p);
        v = act(g, v, p);
    }
    return v;
}

inline Flag random_flag(PhiloxStream& rng, long p) {
    Mat3 g = random_p_unimodular<3>(rng, p);
    Flag f = transform_flag(g, Flag::standard());
    return f;
}

}  // namespace a2walk
