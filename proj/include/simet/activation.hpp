#pragma once

// Activation functions and their exact derivatives. All kinds are elementwise
// except softmax, which acts on the whole layer output. relu, leaky_relu and
// saturating_ramp are the non-differentiable kinds: they carry a per-unit
// region code and a kink test (pre-activation within 1e-15 of a glue point).
// At an exact kink the derivative is taken from the inactive/plateau side and
// the event is flagged so callers can decide policy.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "simet/errors.hpp"
#include "simet/linalg.hpp"

namespace simet {

enum class ActKind : std::uint8_t {
    identity,
    sigmoid,
    tanh_fn,
    softplus,
    softmax,
    relu,
    leaky_relu,
    saturating_ramp,
};

struct Activation {
    ActKind kind = ActKind::identity;
    double slope = 0.01; // leaky_relu only
    // saturating_ramp: alpha for x < a, inner(x) on [a, b], beta for x > b
    double alpha = 0.0;
    double beta = 1.0;
    double a = 0.0;
    double b = 1.0;
    ActKind inner = ActKind::identity;

    static Activation make(ActKind k) { return Activation{k, 0.01, 0, 1, 0, 1, ActKind::identity}; }
    static Activation leaky(double s) { return Activation{ActKind::leaky_relu, s, 0, 1, 0, 1, ActKind::identity}; }
    static Activation ramp(double alpha, double beta, double a, double b, ActKind inner) {
        return Activation{ActKind::saturating_ramp, 0.01, alpha, beta, a, b, inner};
    }
};

inline double sigmoid_value(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus_value(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace detail {

inline bool smooth_monotone_kind(ActKind k) {
    return k == ActKind::identity || k == ActKind::sigmoid || k == ActKind::tanh_fn ||
           k == ActKind::softplus;
}

inline double smooth_value(ActKind k, double x) {
    switch (k) {
    case ActKind::identity: return x;
    case ActKind::sigmoid: return sigmoid_value(x);
    case ActKind::tanh_fn: return std::tanh(x);
    case ActKind::softplus: return softplus_value(x);
    default: throw ContractViolation("smooth_value: not an elementwise smooth kind");
    }
}

inline double smooth_derivative(ActKind k, double x) {
    switch (k) {
    case ActKind::identity: return 1.0;
    case ActKind::sigmoid: {
        const double s = sigmoid_value(x);
        return s * (1.0 - s);
    }
    case ActKind::tanh_fn: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case ActKind::softplus: return sigmoid_value(x);
    default: throw ContractViolation("smooth_derivative: not an elementwise smooth kind");
    }
}

// global bound on |sigma'| for the smooth kinds
inline double smooth_derivative_bound(ActKind k) {
    switch (k) {
    case ActKind::identity: return 1.0;
    case ActKind::sigmoid: return 0.25;
    case ActKind::tanh_fn: return 1.0;
    case ActKind::softplus: return 1.0;
    default: throw ContractViolation("smooth_derivative_bound: not a smooth kind");
    }
}

} // namespace detail

inline bool is_elementwise(const Activation& act) { return act.kind != ActKind::softmax; }

inline bool is_nonsmooth(const Activation& act) {
    return act.kind == ActKind::relu || act.kind == ActKind::leaky_relu ||
           act.kind == ActKind::saturating_ramp;
}

inline void validate_activation(const Activation& act) {
    if (act.kind == ActKind::leaky_relu) {
        if (!std::isfinite(act.slope) || act.slope == 0.0 || act.slope == 1.0)
            throw ContractViolation("leaky_relu slope must be finite and different from 0 and 1");
    } else if (act.kind == ActKind::saturating_ramp) {
        if (!detail::smooth_monotone_kind(act.inner))
            throw ContractViolation("saturating_ramp inner must be a smooth monotone elementwise kind");
        if (!(act.a < act.b)) throw ContractViolation("saturating_ramp requires a < b");
        const double ha = detail::smooth_value(act.inner, act.a);
        const double hb = detail::smooth_value(act.inner, act.b);
        if (!(act.alpha <= ha) || !(hb <= act.beta))
            throw ContractViolation("saturating_ramp plateaus must satisfy alpha <= h(a) and h(b) <= beta");
    }
}

constexpr double kKinkTolerance = 1e-15;

// True when the pre-activation sits on a glue point of a non-differentiable kind.
inline bool on_kink(const Activation& act, double pre) {
    switch (act.kind) {
    case ActKind::relu:
    case ActKind::leaky_relu: return std::abs(pre) <= kKinkTolerance;
    case ActKind::saturating_ramp:
        return std::abs(pre - act.a) <= kKinkTolerance || std::abs(pre - act.b) <= kKinkTolerance;
    default: return false;
    }
}

inline double activation_value(const Activation& act, double pre) {
    switch (act.kind) {
    case ActKind::relu: return pre > 0.0 ? pre : 0.0;
    case ActKind::leaky_relu: return pre > 0.0 ? pre : act.slope * pre;
    case ActKind::saturating_ramp:
        if (pre < act.a) return act.alpha;
        if (pre > act.b) return act.beta;
        return detail::smooth_value(act.inner, pre);
    case ActKind::softmax: throw ContractViolation("softmax is not elementwise");
    default: return detail::smooth_value(act.kind, pre);
    }
}

// Exact derivative; at a kink the inactive/plateau side is used.
inline double activation_derivative(const Activation& act, double pre) {
    switch (act.kind) {
    case ActKind::relu: return pre > 0.0 ? 1.0 : 0.0;
    case ActKind::leaky_relu: return pre > 0.0 ? 1.0 : act.slope;
    case ActKind::saturating_ramp:
        // glue points themselves take the plateau-side derivative (0)
        if (pre > act.a && pre < act.b) return detail::smooth_derivative(act.inner, pre);
        return 0.0;
    case ActKind::softmax: throw ContractViolation("softmax is not elementwise");
    default: return detail::smooth_derivative(act.kind, pre);
    }
}

// Region code for the activation signature. relu / leaky_relu: 0 = inactive,
// 1 = active (exact zero counts as inactive). saturating_ramp: 0 below,
// 1 middle, 2 above.
inline std::uint8_t region_code(const Activation& act, double pre) {
    switch (act.kind) {
    case ActKind::relu:
    case ActKind::leaky_relu: return pre > 0.0 ? std::uint8_t{1} : std::uint8_t{0};
    case ActKind::saturating_ramp:
        // glue points belong to the plateau side, matching the derivative convention
        if (pre <= act.a) return 0;
        if (pre >= act.b) return 2;
        return 1;
    default: throw ContractViolation("region_code: activation is smooth");
    }
}

// Global bound on |sigma'|, used by suggest_tau.
inline double derivative_bound(const Activation& act) {
    switch (act.kind) {
    case ActKind::relu: return 1.0;
    case ActKind::leaky_relu: return std::max(1.0, std::abs(act.slope));
    case ActKind::saturating_ramp: {
        // plateaus contribute 0; bound the inner kind on [a, b] by its global bound
        return detail::smooth_derivative_bound(act.inner);
    }
    case ActKind::softmax: return 1.0; // ||diag(s) - s s^T||_2 <= max s_i(1 - s_i) + ... <= 1
    default: return detail::smooth_derivative_bound(act.kind);
    }
}

inline Vector softmax_value(const Vector& pre) {
    double m = pre[0];
    for (double x : pre) m = std::max(m, x);
    Vector out(pre.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < pre.size(); ++i) {
        out[i] = std::exp(pre[i] - m);
        sum += out[i];
    }
    for (std::size_t i = 0; i < pre.size(); ++i) out[i] /= sum;
    return out;
}

// J = diag(s) - s s^T evaluated from the post-activation values.
inline Matrix softmax_jacobian(const Vector& post) {
    const std::size_t n = post.size();
    Matrix j(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            j(i, k) = (i == k ? post[i] * (1.0 - post[i]) : -post[i] * post[k]);
    return j;
}

inline std::string activation_to_string(const Activation& act) {
    auto kind_name = [](ActKind k) -> std::string {
        switch (k) {
        case ActKind::identity: return "identity";
        case ActKind::sigmoid: return "sigmoid";
        case ActKind::tanh_fn: return "tanh";
        case ActKind::softplus: return "softplus";
        case ActKind::softmax: return "softmax";
        case ActKind::relu: return "relu";
        case ActKind::leaky_relu: return "leaky_relu";
        case ActKind::saturating_ramp: return "saturating_ramp";
        }
        return "?";
    };
    if (act.kind == ActKind::leaky_relu) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "leaky_relu:%.17g", act.slope);
        return buf;
    }
    if (act.kind == ActKind::saturating_ramp) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "saturating_ramp:%.17g:%.17g:%.17g:%.17g:%s", act.alpha,
                      act.beta, act.a, act.b, kind_name(act.inner).c_str());
        return buf;
    }
    return kind_name(act.kind);
}

inline Activation activation_from_string(const std::string& s) {
    auto parse_kind = [](const std::string& name) -> ActKind {
        if (name == "identity") return ActKind::identity;
        if (name == "sigmoid") return ActKind::sigmoid;
        if (name == "tanh") return ActKind::tanh_fn;
        if (name == "softplus") return ActKind::softplus;
        if (name == "softmax") return ActKind::softmax;
        if (name == "relu") return ActKind::relu;
        throw IoError("unknown activation kind '" + name + "'");
    };
    const auto colon = s.find(':');
    if (colon == std::string::npos) return Activation::make(parse_kind(s));
    const std::string head = s.substr(0, colon);
    if (head == "leaky_relu") {
        Activation act = Activation::leaky(std::stod(s.substr(colon + 1)));
        validate_activation(act);
        return act;
    }
    if (head == "saturating_ramp") {
        std::string rest = s.substr(colon + 1);
        double vals[4];
        for (double& v : vals) {
            const auto next = rest.find(':');
            if (next == std::string::npos) throw IoError("malformed saturating_ramp spec '" + s + "'");
            v = std::stod(rest.substr(0, next));
            rest = rest.substr(next + 1);
        }
        Activation act = Activation::ramp(vals[0], vals[1], vals[2], vals[3], parse_kind(rest));
        validate_activation(act);
        return act;
    }
    throw IoError("unknown activation spec '" + s + "'");
}

} // namespace simet
