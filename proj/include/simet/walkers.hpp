#pragma once

// Random walks on (and between) equivalence classes.
//
//   simec          null-eigenvector walk, stays in one class
//   simexp         non-null-eigenvector walk, hops between classes
//   simec_1d_leaky single-eigenvector walk with direction coherence and a
//                  break on signature/kernel change (piecewise-linear layers)
//   simec_guarded  simec plus a per-step metric-jump guard with threshold tau
//
// All modes: a candidate step landing exactly on an activation kink is
// rejected and resampled (up to 8 draws) before the walk stops with on_kink.
// Guard order in guarded mode: on-kink, metric jump, kernel-dim change,
// energy budget; the first failure wins and the offending point is not
// retained. The 1d mode follows the accept-then-check order instead, so the
// crossing point is kept and the walk reports why it stopped.
//
// Every step uses the metric at the segment start for the energy and
// pseudolength increments. Kernel emptiness at the start point raises
// NoDirectionError; mid-walk it terminates the walk with kernel_dim_changed.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "simet/metric.hpp"
#include "simet/network.hpp"
#include "simet/rng.hpp"

namespace simet {

enum class WalkMode : std::uint8_t { simec, simexp, simec_1d_leaky, simec_guarded };

enum class Termination : std::uint8_t {
    max_iterations,
    kernel_dim_changed,
    region_changed,
    metric_jump,
    on_kink,
    energy_budget_exceeded,
};

inline std::string to_string(WalkMode m) {
    switch (m) {
    case WalkMode::simec: return "simec";
    case WalkMode::simexp: return "simexp";
    case WalkMode::simec_1d_leaky: return "simec_1d_leaky";
    case WalkMode::simec_guarded: return "simec_guarded";
    }
    return "?";
}

inline WalkMode walk_mode_from_string(const std::string& s) {
    if (s == "simec") return WalkMode::simec;
    if (s == "simexp") return WalkMode::simexp;
    if (s == "simec_1d_leaky") return WalkMode::simec_1d_leaky;
    if (s == "simec_guarded") return WalkMode::simec_guarded;
    throw ContractViolation("unknown walk mode '" + s + "'");
}

inline std::string to_string(Termination t) {
    switch (t) {
    case Termination::max_iterations: return "max_iterations";
    case Termination::kernel_dim_changed: return "kernel_dim_changed";
    case Termination::region_changed: return "region_changed";
    case Termination::metric_jump: return "metric_jump";
    case Termination::on_kink: return "on_kink";
    case Termination::energy_budget_exceeded: return "energy_budget_exceeded";
    }
    return "?";
}

inline Termination termination_from_string(const std::string& s) {
    for (auto t : {Termination::max_iterations, Termination::kernel_dim_changed,
                   Termination::region_changed, Termination::metric_jump, Termination::on_kink,
                   Termination::energy_budget_exceeded})
        if (to_string(t) == s) return t;
    throw ContractViolation("unknown termination '" + s + "'");
}

struct WalkConfig {
    WalkMode mode = WalkMode::simec;
    std::size_t steps = 1;  // K
    double delta = 1e-2;
    double eps = 1e-8;
    EpsMode eps_mode = EpsMode::absolute;
    double tau = 0.0; // guarded mode; must be > 0 there
    std::uint64_t seed = 0;
    std::optional<double> energy_budget; // per-step dE cap
    std::optional<Vector> v0;            // 1d mode orientation
};

struct WalkResult {
    std::vector<Vector> points;  // p0 plus up to K accepted points
    std::vector<Vector> outputs; // network output per retained point
    std::vector<ActivationSignature> signatures;
    std::vector<double> step_dE;  // aligned with points; entry 0 is 0
    std::vector<double> step_dPl;
    double energy = 0.0;
    double pseudolength = 0.0;
    Termination termination = Termination::max_iterations;
};

enum class DirectionSet : std::uint8_t { null_set, nonnull_set };

// Random unit direction in the span of the selected eigenvectors: iid
// standard-normal coefficients over the orthonormal eigenbasis, normalized,
// i.e. uniform on the subspace sphere.
inline Vector sample_direction(const PullbackMetric& pm, DirectionSet which, NormalSampler& rng) {
    const auto& idx = (which == DirectionSet::null_set) ? pm.null_indices : pm.nonnull_indices;
    if (idx.empty())
        throw NoDirectionError(which == DirectionSet::null_set
                                   ? "kernel is empty (kernel_dim = 0)"
                                   : "no non-null eigenvectors (fully degenerate metric)");
    const std::size_t n = pm.eigen.eigenvectors.rows();
    Vector v(n);
    double nv = 0.0;
    do {
        for (std::size_t i = 0; i < n; ++i) v[i] = 0.0;
        for (std::size_t k : idx) {
            const double c = rng.next();
            for (std::size_t i = 0; i < n; ++i) v[i] += c * pm.eigen.eigenvectors(i, k);
        }
        nv = norm2(v);
    } while (nv == 0.0);
    return (1.0 / nv) * v;
}

namespace detail {

// Deterministic 1d-mode choice: the null eigenvector most aligned with the
// previous direction, sign-flipped so v_k . v_{k-1} >= 0.
inline Vector coherent_null_direction(const PullbackMetric& pm, const Vector& prev) {
    double best = -1.0;
    std::size_t best_idx = pm.null_indices.front();
    for (std::size_t k : pm.null_indices) {
        const Vector q = pm.eigen.eigenvector(k);
        const double d = std::abs(dot(q, prev));
        if (d > best) {
            best = d;
            best_idx = k;
        }
    }
    Vector v = pm.eigen.eigenvector(best_idx);
    if (dot(v, prev) < 0.0)
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = -v[i];
    return v;
}

inline void validate_config(const NetworkSpec& net, const Vector& p0, const WalkConfig& cfg) {
    if (net.recurrent)
        throw UnsupportedError("walks operate on plain networks; freeze the memory into a "
                               "fixed-state network first");
    if (p0.size() != net.input_dim) throw ShapeError("walk start point has wrong dimension");
    require_finite(p0, "walk start point");
    if (cfg.steps < 1) throw ContractViolation("walk needs at least one step");
    if (!(cfg.delta > 0.0) || !std::isfinite(cfg.delta))
        throw ContractViolation("delta must be positive and finite");
    if (!(cfg.eps > 0.0) || !std::isfinite(cfg.eps))
        throw ContractViolation("eps must be positive and finite");
    if (cfg.mode == WalkMode::simec_guarded && (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)))
        throw ContractViolation("guarded mode needs tau > 0 (see suggest_tau)");
    if (cfg.energy_budget && !(*cfg.energy_budget > 0.0))
        throw ContractViolation("energy budget must be positive");
    if (cfg.mode == WalkMode::simec_1d_leaky && cfg.v0 && norm2(*cfg.v0) == 0.0)
        throw ContractViolation("v0 must be nonzero");
}

} // namespace detail

inline WalkResult run_walk(const NetworkSpec& net, const Vector& p0, const WalkConfig& cfg,
                           const OutputMetric& g) {
    detail::validate_config(net, p0, cfg);

    Xoshiro256PlusPlus rng(cfg.seed);
    NormalSampler normals(rng);

    WalkResult res;
    PullbackMetric pm = analyze_point(net, p0, g, cfg.eps, cfg.eps_mode);
    ForwardTrace tr = forward(net, p0);
    ActivationSignature sig = activation_signature(net, tr);

    res.points.push_back(p0);
    res.outputs.push_back(tr.output);
    res.signatures.push_back(sig);
    res.step_dE.push_back(0.0);
    res.step_dPl.push_back(0.0);

    const bool one_dimensional = cfg.mode == WalkMode::simec_1d_leaky;
    const DirectionSet want =
        (cfg.mode == WalkMode::simexp) ? DirectionSet::nonnull_set : DirectionSet::null_set;

    // fail loudly if the start point offers no direction at all
    if (want == DirectionSet::null_set && pm.null_indices.empty())
        throw NoDirectionError("kernel is empty at the start point (kernel_dim = 0)");
    if (want == DirectionSet::nonnull_set && pm.nonnull_indices.empty())
        throw NoDirectionError("metric fully degenerate at the start point (all eigenvalues <= eps)");
    if (one_dimensional && pm.null_indices.empty())
        throw NoDirectionError("1d walk needs kernel_dim >= 1 at the start point");

    Vector prev_dir;
    if (one_dimensional)
        prev_dir = cfg.v0 ? normalized(*cfg.v0) : pm.eigen.eigenvector(pm.null_indices.front());

    for (std::size_t k = 1; k <= cfg.steps; ++k) {
        const auto& idx = (want == DirectionSet::null_set) ? pm.null_indices : pm.nonnull_indices;
        if (idx.empty()) {
            res.termination = Termination::kernel_dim_changed;
            return res;
        }

        // draw a direction; reject candidates sitting exactly on a kink
        const int max_attempts = one_dimensional ? 1 : 8;
        Vector dir, cand;
        ForwardTrace cand_tr;
        bool ok = false;
        for (int attempt = 0; attempt < max_attempts; ++attempt) {
            dir = one_dimensional ? detail::coherent_null_direction(pm, prev_dir)
                                  : sample_direction(pm, want, normals);
            cand = res.points.back();
            axpy(cfg.delta, dir, cand);
            cand_tr = forward(net, cand);
            if (!cand_tr.on_kink) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            res.termination = Termination::on_kink;
            return res;
        }

        const StepIncrements inc = step_increments(pm.h, dir, cfg.delta);
        PullbackMetric cand_pm = analyze_point(net, cand, g, cfg.eps, cfg.eps_mode);
        ActivationSignature cand_sig = activation_signature(net, cand_tr);

        if (cfg.mode == WalkMode::simec_guarded) {
            if (metric_jump(cand_pm.h, pm.h, cfg.tau)) {
                res.termination = Termination::metric_jump;
                return res;
            }
            if (cand_pm.kernel_dim() != pm.kernel_dim()) {
                res.termination = Termination::kernel_dim_changed;
                return res;
            }
        }
        if (cfg.energy_budget && inc.dE > *cfg.energy_budget) {
            res.termination = Termination::energy_budget_exceeded;
            return res;
        }

        res.points.push_back(cand);
        res.outputs.push_back(cand_tr.output);
        res.signatures.push_back(cand_sig);
        res.step_dE.push_back(inc.dE);
        res.step_dPl.push_back(inc.dPl);
        res.energy += inc.dE;
        res.pseudolength += inc.dPl;

        if (one_dimensional) {
            // accept-then-check: the crossing point stays in the output
            if (cand_sig != sig) {
                res.termination = Termination::region_changed;
                return res;
            }
            if (cand_pm.kernel_dim() != pm.kernel_dim()) {
                res.termination = Termination::kernel_dim_changed;
                return res;
            }
            prev_dir = dir;
        }

        pm = std::move(cand_pm);
        sig = std::move(cand_sig);
    }
    res.termination = Termination::max_iterations;
    return res;
}

inline WalkResult simec_nd(const NetworkSpec& net, const Vector& p0, const WalkConfig& cfg,
                           const OutputMetric& g) {
    if (cfg.mode != WalkMode::simec) throw ContractViolation("simec_nd: cfg.mode must be simec");
    return run_walk(net, p0, cfg, g);
}

inline WalkResult simexp_nd(const NetworkSpec& net, const Vector& p0, const WalkConfig& cfg,
                            const OutputMetric& g) {
    if (cfg.mode != WalkMode::simexp) throw ContractViolation("simexp_nd: cfg.mode must be simexp");
    return run_walk(net, p0, cfg, g);
}

inline WalkResult simec_1d_leaky(const NetworkSpec& net, const Vector& p0, const Vector& v0,
                                 const WalkConfig& cfg, const OutputMetric& g) {
    if (cfg.mode != WalkMode::simec_1d_leaky)
        throw ContractViolation("simec_1d_leaky: cfg.mode must be simec_1d_leaky");
    WalkConfig c = cfg;
    c.v0 = v0;
    return run_walk(net, p0, c, g);
}

inline WalkResult simec_guarded(const NetworkSpec& net, const Vector& p0, const WalkConfig& cfg,
                                const OutputMetric& g) {
    if (cfg.mode != WalkMode::simec_guarded)
        throw ContractViolation("simec_guarded: cfg.mode must be simec_guarded");
    return run_walk(net, p0, cfg, g);
}

} // namespace simet
