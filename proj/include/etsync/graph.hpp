#pragma once

#include <cmath>
#include <cstdint>
#include <queue>
#include <sstream>
#include <utility>
#include <vector>

#include "etsync/errors.hpp"
#include "etsync/matrix.hpp"
#include "etsync/numerics.hpp"

namespace etsync {

// Undirected, unweighted communication graph. Nodes are 0-indexed.
struct Topology {
    int n_nodes = 0;
    std::vector<std::uint8_t> adjacency; // row-major n x n, symmetric, zero diagonal

    bool has_edge(int i, int j) const {
        return adjacency[static_cast<std::size_t>(i) * n_nodes + j] != 0;
    }

    int degree(int i) const {
        int d = 0;
        for (int j = 0; j < n_nodes; ++j) d += has_edge(i, j) ? 1 : 0;
        return d;
    }

    std::vector<int> neighbours(int i) const {
        std::vector<int> out;
        for (int j = 0; j < n_nodes; ++j)
            if (has_edge(i, j)) out.push_back(j);
        return out;
    }

    bool connected() const {
        if (n_nodes <= 0) return false;
        std::vector<char> seen(n_nodes, 0);
        std::queue<int> frontier;
        frontier.push(0);
        seen[0] = 1;
        int reached = 1;
        while (!frontier.empty()) {
            const int u = frontier.front();
            frontier.pop();
            for (int v = 0; v < n_nodes; ++v) {
                if (has_edge(u, v) && !seen[v]) {
                    seen[v] = 1;
                    ++reached;
                    frontier.push(v);
                }
            }
        }
        return reached == n_nodes;
    }

    // Ring of n nodes where every node links to its two nearest neighbours
    // on each side (distance 1 and 2 around the ring, indices mod n).
    static Topology two_nearest_neighbour(int n) {
        if (n < 5)
            throw topology_error("two_nearest_neighbour: need at least 5 nodes so the "
                                 "four ring offsets are distinct");
        Topology t;
        t.n_nodes = n;
        t.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
        for (int i = 0; i < n; ++i) {
            for (int d : {1, 2}) {
                const int fwd = (i + d) % n;
                const int back = ((i - d) % n + n) % n;
                t.adjacency[static_cast<std::size_t>(i) * n + fwd] = 1;
                t.adjacency[static_cast<std::size_t>(i) * n + back] = 1;
            }
        }
        return t;
    }

    static Topology from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
        if (n <= 0) throw topology_error("from_edges: node count must be positive");
        Topology t;
        t.n_nodes = n;
        t.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
        for (const auto& [u, v] : edges) {
            if (u < 0 || v < 0 || u >= n || v >= n) {
                std::ostringstream msg;
                msg << "from_edges: edge (" << u << "," << v << ") out of range for "
                    << n << " nodes";
                throw topology_error(msg.str());
            }
            if (u == v) {
                std::ostringstream msg;
                msg << "from_edges: self-loop at node " << u;
                throw topology_error(msg.str());
            }
            t.adjacency[static_cast<std::size_t>(u) * n + v] = 1;
            t.adjacency[static_cast<std::size_t>(v) * n + u] = 1;
        }
        return t;
    }
};

// Graph Laplacian L = D - A. Rows sum to zero exactly because the diagonal
// is assembled by counting the same entries that fill the off-diagonal.
inline Matrix build_laplacian(const Topology& t) {
    const int n = t.n_nodes;
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        int deg = 0;
        for (int j = 0; j < n; ++j) {
            if (t.has_edge(i, j)) {
                l(i, j) = -1.0;
                ++deg;
            }
        }
        l(i, i) = static_cast<double>(deg);
    }
    return l;
}

// Eigenstructure of a connected graph Laplacian. `basis` is the full
// orthogonal eigenvector matrix with the consensus direction 1/sqrt(N)
// pinned as its first column; `reduced_basis` drops that column and spans
// the disagreement subspace.
struct LaplacianSpectrum {
    Vec eigenvalues;      // ascending; eigenvalues[0] is the ~0 consensus mode
    Matrix basis;         // N x N orthogonal
    Matrix reduced_basis; // N x (N-1), columns 2..N of basis

    double lambda2() const { return eigenvalues[1]; }
    double lambda_max() const { return eigenvalues.back(); }
};

inline LaplacianSpectrum spectral_decompose(const Matrix& laplacian) {
    const std::size_t n = laplacian.rows();
    if (n == 0 || n != laplacian.cols())
        throw config_error("spectral_decompose: laplacian must be square and non-empty");

    // Traversal pre-check on the sparsity pattern; cheaper and clearer
    // than diagnosing disconnection from a numerically tiny eigenvalue.
    {
        std::vector<char> seen(n, 0);
        std::queue<std::size_t> frontier;
        frontier.push(0);
        seen[0] = 1;
        std::size_t reached = 1;
        while (!frontier.empty()) {
            const std::size_t u = frontier.front();
            frontier.pop();
            for (std::size_t v = 0; v < n; ++v) {
                if (u != v && laplacian(u, v) != 0.0 && !seen[v]) {
                    seen[v] = 1;
                    ++reached;
                    frontier.push(v);
                }
            }
        }
        if (reached != n)
            throw topology_error("spectral_decompose: graph is not connected");
    }

    const EigenDecomposition eig = jacobi_eigen(laplacian);

    LaplacianSpectrum s;
    s.eigenvalues = eig.eigenvalues;
    s.basis = eig.eigenvectors;
    if (n > 1 && s.eigenvalues[1] <= 1e-8)
        throw topology_error("spectral_decompose: second eigenvalue is not positive; "
                             "graph is numerically disconnected");

    // The kernel of a connected Laplacian is exactly the consensus line,
    // so the first column may be replaced by its canonical representative.
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) s.basis(i, 0) = inv_sqrt_n;

    s.reduced_basis = Matrix(n, n - 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 1; k < n; ++k)
            s.reduced_basis(i, k - 1) = s.basis(i, k);
    return s;
}

} // namespace etsync
