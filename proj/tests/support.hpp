#pragma once

// Shared helpers for the test suite: deterministic random matrices and the
// reference scenario used across modules (10-node ring, rotational drift).

#include <cmath>
#include <utility>
#include <vector>

#include <etsync/gains.hpp>
#include <etsync/graph.hpp>
#include <etsync/matrix.hpp>
#include <etsync/numerics.hpp>
#include <etsync/rng.hpp>

namespace testsupport {

using etsync::Matrix;
using etsync::Vec;

inline Matrix random_matrix(etsync::SplitMix64& rng, std::size_t rows, std::size_t cols,
                            double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.next_uniform(lo, hi);
    return m;
}

// Hurwitz by construction: symmetric negative definite part -M^T M - eps I
// plus a random skew part, so every eigenvalue has real part <= -eps.
inline Matrix random_hurwitz(etsync::SplitMix64& rng, std::size_t n, double eps) {
    const Matrix m = random_matrix(rng, n, n);
    const Matrix r = random_matrix(rng, n, n);
    Matrix h = (-1.0) * (m.transposed() * m) - eps * Matrix::identity(n);
    const Matrix skew = 0.5 * (r - r.transposed());
    return h + skew;
}

// Random connected undirected graph: a random attachment tree plus extra
// random edges. Connected by construction.
inline etsync::Topology random_connected_graph(etsync::SplitMix64& rng, int n,
                                               double extra_edge_prob = 0.15) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i < n; ++i) {
        const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i));
        edges.emplace_back(j, i);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.next_double() < extra_edge_prob) edges.emplace_back(i, j);
    return etsync::Topology::from_edges(n, edges);
}

// The demo network used throughout: 10-node two-nearest-neighbour ring,
// rotational node dynamics, scalar input.
inline etsync::ControlDesign demo_design() {
    etsync::ControlDesign d;
    d.h = Matrix{{0.0, -0.5}, {0.5, 0.0}};
    d.b = Vec{0.0, 1.0};
    d.k = Vec{-0.5, 1.0};
    return d;
}

// Closed-form eigenvalues of the two-nearest-neighbour ring Laplacian:
// 4 - 2cos(2 pi k / N) - 2cos(4 pi k / N), k = 0..N-1. Circulant first row
// (4, -1, -1, 0, ..., 0, -1, -1) makes this an independent oracle.
inline std::vector<double> ring_eigenvalues(int n) {
    std::vector<double> lam(n);
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (int k = 0; k < n; ++k) {
        const double t = two_pi * k / n;
        lam[k] = 4.0 - 2.0 * std::cos(t) - 2.0 * std::cos(2.0 * t);
    }
    std::sort(lam.begin(), lam.end());
    return lam;
}

} // namespace testsupport
