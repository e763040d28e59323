#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "etsync/errors.hpp"
#include "etsync/matrix.hpp"

namespace etsync {

struct EigenDecomposition {
    Vec eigenvalues;     // ascending
    Matrix eigenvectors; // orthogonal, column k pairs with eigenvalues[k]
    int sweeps = 0;
};

// Cyclic Jacobi eigensolver for real symmetric matrices. Quadratic
// convergence makes a handful of sweeps enough for any size this library
// meets, and the accumulated rotations give an orthogonal basis for free.
inline EigenDecomposition jacobi_eigen(const Matrix& input, double tol = 1e-13,
                                       int max_sweeps = 100) {
    const std::size_t n = input.rows();
    if (n != input.cols())
        throw std::domain_error("jacobi_eigen: matrix is not square");
    if (!is_symmetric(input, 1e-12 * std::max(1.0, max_abs(input))))
        throw std::domain_error("jacobi_eigen: matrix is not symmetric");

    Matrix a = input;
    // Force exact symmetry so the rotations stay consistent.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

    Matrix v = Matrix::identity(n);
    const double scale = std::max(1.0, frobenius_norm(a));

    EigenDecomposition out;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                off += 2.0 * a(i, j) * a(i, j);
        if (std::sqrt(off) <= tol * scale) {
            converged = true;
            out.sweeps = sweep;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e8) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = a(p, i) = aip - s * (aiq + tau * aip);
                    a(i, q) = a(q, i) = aiq + s * (aip - tau * aiq);
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = vip - s * (viq + tau * vip);
                    v(i, q) = viq + s * (vip - tau * viq);
                }
            }
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "jacobi_eigen: no convergence after " << max_sweeps << " sweeps";
        throw numerical_error(msg.str());
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i)
            out.eigenvectors(i, k) = v(i, order[k]);
    }
    return out;
}

// Gaussian elimination with partial pivoting. The systems here are tiny
// (at most state_dim^2 unknowns), so dense LU is the right tool.
inline Vec solve_linear(Matrix a, Vec b) {
    const std::size_t n = a.rows();
    if (n != a.cols() || b.size() != n)
        throw config_error("solve_linear: shape mismatch");
    const double scale = std::max(1.0, max_abs(a));

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) <= 1e-13 * scale)
            throw numerical_error("solve_linear: matrix is singular");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

// Solve H^T P + P H = -2 I for symmetric positive definite P by
// vectorising into an n^2 x n^2 linear system. Throws if the system is
// singular (H has eigenvalues summing to zero in pairs), if the residual
// is out of tolerance, or if the solution is not positive definite
// (H not Hurwitz, i.e. the mode is not stabilised).
inline Matrix solve_lyapunov(const Matrix& h) {
    const std::size_t n = h.rows();
    if (n == 0 || n != h.cols())
        throw config_error("solve_lyapunov: matrix must be square and non-empty");
    if (n > 32)
        throw config_error("solve_lyapunov: dimension above supported limit of 32");

    const std::size_t m = n * n;
    Matrix sys(m, m);
    Vec rhs(m, 0.0);
    // Row (i,j) of the vectorised equation; unknown entry P(k,l).
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t row = i * n + j;
            for (std::size_t k = 0; k < n; ++k)
                sys(row, k * n + j) += h(k, i);  // (H^T P)(i,j)
            for (std::size_t l = 0; l < n; ++l)
                sys(row, i * n + l) += h(l, j);  // (P H)(i,j)
            rhs[row] = (i == j) ? -2.0 : 0.0;
        }
    }

    Vec p;
    try {
        p = solve_linear(std::move(sys), std::move(rhs));
    } catch (const numerical_error&) {
        throw numerical_error("solve_lyapunov: vectorised system is singular");
    }

    Matrix result(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            result(i, j) = p[i * n + j];
    // The exact solution is symmetric; strip the numerical skew part.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            result(i, j) = result(j, i) = 0.5 * (result(i, j) + result(j, i));

    Matrix residual = h.transposed() * result + result * h + 2.0 * Matrix::identity(n);
    if (frobenius_norm(residual) > 1e-10 * std::max(1.0, frobenius_norm(result)))
        throw numerical_error("solve_lyapunov: residual out of tolerance");

    const EigenDecomposition eig = jacobi_eigen(result);
    if (eig.eigenvalues.front() <= 0.0)
        throw design_error("solve_lyapunov: solution is not positive definite");
    return result;
}

// Largest singular value, computed as sqrt(lambda_max(M^T M)).
inline double spectral_norm(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    const Matrix gram = m.transposed() * m;
    const EigenDecomposition eig = jacobi_eigen(gram);
    return std::sqrt(std::max(0.0, eig.eigenvalues.back()));
}

// Spectral norm of the rank-one matrix u v^T without forming it.
inline double rank_one_norm(const Vec& u, const Vec& v) {
    return norm2(u) * norm2(v);
}

inline bool is_positive_definite(const Matrix& m) {
    if (m.rows() != m.cols())
        throw std::domain_error("is_positive_definite: matrix is not square");
    if (!is_symmetric(m, 1e-12 * std::max(1.0, max_abs(m))))
        throw std::domain_error("is_positive_definite: matrix is not symmetric");
    return jacobi_eigen(m).eigenvalues.front() > 0.0;
}

// One classical Runge-Kutta step for x' = f(t, x). The callable receives
// (t, state) and returns the derivative; non-finite results abort the
// integration with the offending time in the message.
template <typename F>
Vec rk4_step(F&& f, double t, const Vec& x, double dt) {
    const std::size_t n = x.size();
    auto blend = [n](const Vec& base, const Vec& slope, double h) {
        Vec out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + h * slope[i];
        return out;
    };
    const Vec k1 = f(t, x);
    const Vec k2 = f(t + 0.5 * dt, blend(x, k1, 0.5 * dt));
    const Vec k3 = f(t + 0.5 * dt, blend(x, k2, 0.5 * dt));
    const Vec k4 = f(t + dt, blend(x, k3, dt));

    Vec out(n);
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        finite = finite && std::isfinite(out[i]);
    }
    if (!finite) {
        std::ostringstream msg;
        msg << "rk4_step: state left the representable range at t=" << t + dt;
        throw numerical_error(msg.str());
    }
    return out;
}

} // namespace etsync
