#pragma once

// Singular pullback metric at a point: h = J^T G J with J the network
// Jacobian and G the output metric. The eigendecomposition splits directions
// into null (lambda <= eps) and non-null parts.
//
// Two eigen routes produce the same decomposition contract:
//  - dense: cyclic Jacobi on the full n x n matrix h;
//  - low-rank: when the output dimension m is much smaller than n, h has rank
//    at most m. The nonzero eigenpairs come from the m x m matrix W W^T with
//    W = G^(1/2) J (an eigenpair (mu, u) of W W^T maps to (mu, W^T u / |W^T u|)
//    of W^T W), and the kernel is completed with a Householder basis. This is
//    what makes per-step analysis affordable at image sizes.

#include <cmath>
#include <cstddef>
#include <vector>

#include "simet/eigen.hpp"
#include "simet/errors.hpp"
#include "simet/linalg.hpp"
#include "simet/network.hpp"

namespace simet {

struct OutputMetric {
    enum class Kind : std::uint8_t { euclidean_identity, diagonal } kind = Kind::euclidean_identity;
    Vector weights; // diagonal only, all > 0

    static OutputMetric identity() { return OutputMetric{}; }
    static OutputMetric diagonal(Vector w) {
        for (double x : w)
            if (!(x > 0.0) || !std::isfinite(x))
                throw ContractViolation("diagonal output metric weights must be positive and finite");
        return OutputMetric{Kind::diagonal, std::move(w)};
    }

    void check_dim(std::size_t m) const {
        if (kind == Kind::diagonal && weights.size() != m)
            throw ShapeError("output metric dimension " + std::to_string(weights.size()) +
                             " != " + std::to_string(m));
    }
};

// W = G^(1/2) J, i.e. row h of J scaled by sqrt(g_h).
inline Matrix sqrt_metric_times(const OutputMetric& g, const Matrix& j) {
    g.check_dim(j.rows());
    if (g.kind == OutputMetric::Kind::euclidean_identity) return j;
    Matrix w = j;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double s = std::sqrt(g.weights[i]);
        double* row = w.row_ptr(i);
        for (std::size_t c = 0; c < w.cols(); ++c) row[c] *= s;
    }
    return w;
}

// (F^*g)_{ij} = sum_{h,k} dF^h/dx^i g_{hk} dF^k/dx^j, with rows of J indexing
// outputs. Bit-symmetric by construction.
inline Matrix pullback(const Matrix& j, const OutputMetric& g) {
    g.check_dim(j.rows());
    return gram(sqrt_metric_times(g, j));
}

struct PullbackMetric {
    Vector point;
    Matrix h; // symmetric PSD, n x n
    SymmetricEigenDecomposition eigen;
    std::vector<std::size_t> null_indices;    // eigenvalues <= eps
    std::vector<std::size_t> nonnull_indices; // eigenvalues > eps
    double eps_used = 0.0;

    std::size_t kernel_dim() const { return null_indices.size(); }
};

enum class EpsMode : std::uint8_t {
    absolute, // null iff lambda <= eps
    relative  // null iff lambda <= eps * lambda_max
};

namespace detail {

constexpr double kPsdClamp = 1e-10;

inline void clamp_psd(std::vector<double>& eigenvalues) {
    for (double& lam : eigenvalues) {
        if (lam < 0.0) {
            if (lam <= -kPsdClamp)
                throw NumericError("pullback metric eigenvalue " + std::to_string(lam) +
                                   " below the PSD roundoff tolerance");
            lam = 0.0;
        }
    }
}

inline SymmetricEigenDecomposition low_rank_eigen(const Matrix& w) {
    const std::size_t n = w.cols();
    // small problem: W W^T (m x m)
    Matrix s(w.rows(), w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j2 = 0; j2 <= i; ++j2) {
            double acc = 0.0;
            const double* ri = w.row_ptr(i);
            const double* rj = w.row_ptr(j2);
            for (std::size_t c = 0; c < n; ++c) acc += ri[c] * rj[c];
            s(i, j2) = acc;
            s(j2, i) = acc;
        }
    auto small = sym_eigen(s);
    clamp_psd(small.eigenvalues);
    double mu_max = 0.0;
    for (double mu : small.eigenvalues) mu_max = std::max(mu_max, mu);
    const double drop_tol = 1e-14 * mu_max;

    // lift eigenvectors of W W^T to eigenvectors of W^T W and re-orthonormalize
    std::vector<std::pair<double, Vector>> lifted;
    for (std::size_t idx = 0; idx < small.eigenvalues.size(); ++idx) {
        const double mu = small.eigenvalues[idx];
        if (mu <= drop_tol) continue; // rank-deficient direction, ends up in the kernel
        const Vector u = small.eigenvector(idx);
        Vector v(n);
        for (std::size_t r = 0; r < w.rows(); ++r) {
            const double ur = u[r];
            if (ur == 0.0) continue;
            const double* row = w.row_ptr(r);
            for (std::size_t c = 0; c < n; ++c) v[c] += ur * row[c];
        }
        for (const auto& prev : lifted) axpy(-dot(prev.second, v), prev.second, v);
        const double nv = norm2(v);
        if (nv == 0.0) continue;
        lifted.emplace_back(mu, (1.0 / nv) * v);
    }

    const std::size_t r = lifted.size();
    Matrix vmat(n, r);
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t i = 0; i < n; ++i) vmat(i, k) = lifted[k].second[i];
    Matrix kernel = complete_orthonormal_basis(vmat);

    SymmetricEigenDecomposition ed;
    ed.eigenvalues.assign(n, 0.0);
    ed.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < kernel.cols(); ++k)
        for (std::size_t i = 0; i < n; ++i) ed.eigenvectors(i, k) = kernel(i, k);
    for (std::size_t k = 0; k < r; ++k) {
        ed.eigenvalues[kernel.cols() + k] = lifted[k].first;
        for (std::size_t i = 0; i < n; ++i)
            ed.eigenvectors(i, kernel.cols() + k) = lifted[k].second[i];
    }
    canonicalize_eigen(ed);
    return ed;
}

inline bool use_low_rank_route(std::size_t m, std::size_t n) { return n > 64 && 4 * m <= n; }

} // namespace detail

// Pullback metric at a point with the null/non-null eigensplit.
inline PullbackMetric analyze_point(const NetworkSpec& net, const Vector& p, const OutputMetric& g,
                                    double eps, EpsMode mode = EpsMode::absolute) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ContractViolation("analyze_point: eps must be positive");
    const Matrix j = network_jacobian(net, p);
    const Matrix w = sqrt_metric_times(g, j);
    PullbackMetric pm;
    pm.point = p;
    pm.h = gram(w);
    if (detail::use_low_rank_route(j.rows(), j.cols()))
        pm.eigen = detail::low_rank_eigen(w);
    else {
        pm.eigen = sym_eigen(pm.h);
        detail::clamp_psd(pm.eigen.eigenvalues);
    }
    double lam_max = 0.0;
    for (double lam : pm.eigen.eigenvalues) lam_max = std::max(lam_max, lam);
    pm.eps_used = (mode == EpsMode::absolute) ? eps : eps * lam_max;
    for (std::size_t i = 0; i < pm.eigen.eigenvalues.size(); ++i) {
        if (pm.eigen.eigenvalues[i] <= pm.eps_used)
            pm.null_indices.push_back(i);
        else
            pm.nonnull_indices.push_back(i);
    }
    return pm;
}

// True iff some entry differs by strictly more than tau.
inline bool metric_jump(const Matrix& h1, const Matrix& h2, double tau) {
    if (h1.rows() != h2.rows() || h1.cols() != h2.cols())
        throw ShapeError("metric_jump: mismatched shapes");
    if (!(tau > 0.0)) throw ContractViolation("metric_jump: tau must be positive");
    for (std::size_t i = 0; i < h1.data().size(); ++i)
        if (std::abs(h1.data()[i] - h2.data()[i]) > tau) return true;
    return false;
}

// tau = 2 * L * delta, L the product of per-layer operator-norm bounds.
inline double suggest_tau(const NetworkSpec& net, double delta) {
    if (!(delta > 0.0)) throw ContractViolation("suggest_tau: delta must be positive");
    double lip = 1.0;
    for (const Layer& l : net.layers) lip *= layer_lipschitz_bound(l);
    if (!std::isfinite(lip)) throw UnsupportedError("suggest_tau: unbounded layer configuration");
    return 2.0 * lip * delta;
}

struct CurveAccumulators {
    double energy = 0.0;
    double pseudolength = 0.0;
};

struct StepIncrements {
    double dE = 0.0;
    double dPl = 0.0;
};

// Discrete segment contributions for a step of length delta along unit v:
// dE = delta^2 v^T h v and dPl = delta sqrt(v^T h v), so dPl^2 = dE per
// segment. Tiny negative quadratic forms from roundoff clamp to zero.
inline StepIncrements step_increments(const Matrix& h, const Vector& v, double delta) {
    if (!(delta > 0.0)) throw ContractViolation("step_increments: delta must be positive");
    double q = quadratic_form(h, v);
    if (q < 0.0) {
        if (q < -1e-12)
            throw NumericError("step_increments: quadratic form " + std::to_string(q) +
                               " below roundoff tolerance");
        q = 0.0;
    }
    return StepIncrements{delta * delta * q, delta * std::sqrt(q)};
}

} // namespace simet
