#pragma once

// Deterministic symmetric eigensolver: cyclic Jacobi sweeps annihilating
// off-diagonal entries until the off-diagonal Frobenius norm drops below
// 1e-13 * ||M||_F. Output is canonicalized so bit-identical inputs always
// produce bit-identical decompositions:
//   - each eigenvector's first component with |x| > 1e-12 is made positive,
//   - pairs are sorted ascending by eigenvalue, ties broken lexicographically
//     on eigenvector entries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "simet/errors.hpp"
#include "simet/linalg.hpp"

namespace simet {

struct SymmetricEigenDecomposition {
    std::vector<double> eigenvalues; // ascending
    Matrix eigenvectors;             // orthonormal columns, aligned with eigenvalues

    Vector eigenvector(std::size_t k) const {
        Vector v(eigenvectors.rows());
        for (std::size_t i = 0; i < eigenvectors.rows(); ++i) v[i] = eigenvectors(i, k);
        return v;
    }
};

namespace detail {

inline void flip_sign_convention(Matrix& q) {
    for (std::size_t j = 0; j < q.cols(); ++j) {
        double lead = 0.0;
        for (std::size_t i = 0; i < q.rows(); ++i) {
            if (std::abs(q(i, j)) > 1e-12) {
                lead = q(i, j);
                break;
            }
        }
        if (lead < 0.0)
            for (std::size_t i = 0; i < q.rows(); ++i) q(i, j) = -q(i, j);
    }
}

inline bool lex_less_column(const Matrix& q, std::size_t a, std::size_t b) {
    for (std::size_t i = 0; i < q.rows(); ++i) {
        if (q(i, a) < q(i, b)) return true;
        if (q(i, a) > q(i, b)) return false;
    }
    return false;
}

} // namespace detail

// Sign-fix columns, then sort pairs ascending with the lexicographic tie-break.
inline void canonicalize_eigen(SymmetricEigenDecomposition& ed) {
    detail::flip_sign_convention(ed.eigenvectors);
    const std::size_t n = ed.eigenvalues.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ed.eigenvalues[a] != ed.eigenvalues[b]) return ed.eigenvalues[a] < ed.eigenvalues[b];
        return detail::lex_less_column(ed.eigenvectors, a, b);
    });
    std::vector<double> vals(n);
    Matrix q(ed.eigenvectors.rows(), n);
    for (std::size_t k = 0; k < n; ++k) {
        vals[k] = ed.eigenvalues[order[k]];
        for (std::size_t i = 0; i < q.rows(); ++i) q(i, k) = ed.eigenvectors(i, order[k]);
    }
    ed.eigenvalues = std::move(vals);
    ed.eigenvectors = std::move(q);
}

inline SymmetricEigenDecomposition sym_eigen(const Matrix& m) {
    const std::size_t n = m.rows();
    if (n == 0 || m.cols() != n) throw ContractViolation("sym_eigen: matrix must be square and non-empty");
    if (!all_finite(m)) throw NumericError("sym_eigen: non-finite input");
    const double scale = std::max(1.0, max_abs(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale)
                throw ContractViolation("sym_eigen: input not symmetric at (" + std::to_string(i) +
                                        "," + std::to_string(j) + ")");

    Matrix a = m;
    Matrix q = Matrix::identity(n);
    const double norm = frobenius_norm(m);
    const double stop = 1e-13 * norm;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps && off_norm() > stop; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t qi = p + 1; qi < n; ++qi) {
                const double apq = a(p, qi);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(qi, qi);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                a(p, p) = app - t * apq;
                a(qi, qi) = aqq + t * apq;
                a(p, qi) = 0.0;
                a(qi, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == qi) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, qi);
                    a(k, p) = c * akp - s * akq;
                    a(p, k) = a(k, p);
                    a(k, qi) = s * akp + c * akq;
                    a(qi, k) = a(k, qi);
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p);
                    const double qkq = q(k, qi);
                    q(k, p) = c * qkp - s * qkq;
                    q(k, qi) = s * qkp + c * qkq;
                }
            }
        }
    }

    SymmetricEigenDecomposition ed;
    ed.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) ed.eigenvalues[i] = a(i, i);
    ed.eigenvectors = std::move(q);
    canonicalize_eigen(ed);
    return ed;
}

// Orthonormal basis of the complement of span(v), where v has r orthonormal
// columns. Householder QR of v; columns r..n-1 of the implicit Q factor.
inline Matrix complete_orthonormal_basis(const Matrix& v) {
    const std::size_t n = v.rows();
    const std::size_t r = v.cols();
    if (r > n) throw ShapeError("complete_orthonormal_basis: more columns than rows");

    Matrix a = v;
    std::vector<std::vector<double>> reflectors;
    reflectors.reserve(r);
    for (std::size_t j = 0; j < r; ++j) {
        std::vector<double> h(n, 0.0);
        double nx = 0.0;
        for (std::size_t i = j; i < n; ++i) nx += a(i, j) * a(i, j);
        nx = std::sqrt(nx);
        if (nx == 0.0) {
            reflectors.push_back(std::move(h)); // identity reflector
            continue;
        }
        const double alpha = (a(j, j) >= 0.0) ? -nx : nx;
        for (std::size_t i = j; i < n; ++i) h[i] = a(i, j);
        h[j] -= alpha;
        double hn = 0.0;
        for (std::size_t i = j; i < n; ++i) hn += h[i] * h[i];
        hn = std::sqrt(hn);
        if (hn == 0.0) {
            reflectors.push_back(std::vector<double>(n, 0.0));
            continue;
        }
        for (std::size_t i = j; i < n; ++i) h[i] /= hn;
        for (std::size_t col = j; col < r; ++col) {
            double d = 0.0;
            for (std::size_t i = j; i < n; ++i) d += h[i] * a(i, col);
            for (std::size_t i = j; i < n; ++i) a(i, col) -= 2.0 * d * h[i];
        }
        reflectors.push_back(std::move(h));
    }

    Matrix out(n, n - r);
    std::vector<double> b(n);
    for (std::size_t k = r; k < n; ++k) {
        std::fill(b.begin(), b.end(), 0.0);
        b[k] = 1.0;
        for (std::size_t j = r; j-- > 0;) {
            const auto& h = reflectors[j];
            double d = 0.0;
            for (std::size_t i = j; i < n; ++i) d += h[i] * b[i];
            if (d != 0.0)
                for (std::size_t i = j; i < n; ++i) b[i] -= 2.0 * d * h[i];
        }
        for (std::size_t i = 0; i < n; ++i) out(i, k - r) = b[i];
    }
    return out;
}

struct AffineSubspaceFit {
    Matrix basis;  // d x target_dim, orthonormal columns
    Vector offset; // centroid
    double rms_residual = 0.0;
};

// Least-squares affine subspace through a point cloud: eigenvectors of the
// centered scatter matrix. Residual is the RMS point-to-subspace distance.
inline AffineSubspaceFit fit_affine_subspace(const std::vector<Vector>& points, std::size_t target_dim) {
    if (points.empty()) throw ContractViolation("fit_affine_subspace: no points");
    const std::size_t d = points[0].size();
    if (target_dim > d) throw ContractViolation("fit_affine_subspace: target_dim exceeds point dimension");
    if (points.size() < target_dim + 1)
        throw ContractViolation("fit_affine_subspace: need at least target_dim + 1 points");
    for (const auto& p : points) {
        if (p.size() != d) throw ShapeError("fit_affine_subspace: inconsistent point dimensions");
        require_finite(p, "fit_affine_subspace point");
    }

    Vector centroid(d);
    for (const auto& p : points)
        for (std::size_t i = 0; i < d; ++i) centroid[i] += p[i];
    for (std::size_t i = 0; i < d; ++i) centroid[i] /= static_cast<double>(points.size());

    Matrix scatter(d, d);
    Vector c(d);
    for (const auto& p : points) {
        for (std::size_t i = 0; i < d; ++i) c[i] = p[i] - centroid[i];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) scatter(i, j) += c[i] * c[j];
    }

    auto ed = sym_eigen(scatter);
    AffineSubspaceFit fit;
    fit.offset = centroid;
    fit.basis = Matrix(d, target_dim);
    // largest eigenvalues live at the tail of the ascending order
    for (std::size_t k = 0; k < target_dim; ++k) {
        const std::size_t src = d - target_dim + k;
        for (std::size_t i = 0; i < d; ++i) fit.basis(i, k) = ed.eigenvectors(i, src);
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += scatter(i, i);
    double kept = 0.0;
    for (std::size_t k = d - target_dim; k < d; ++k) kept += ed.eigenvalues[k];
    const double mean_sq = std::max(0.0, (trace - kept) / static_cast<double>(points.size()));
    fit.rms_residual = std::sqrt(mean_sq);
    return fit;
}

} // namespace simet
