#pragma once

// A network is an ordered chain of layer maps evaluated on ambient vectors.
// The whole-network Jacobian is the product of layer Jacobians taken right to
// left; the accumulation keeps the running product as the left factor so the
// work stays O(output_dim * layer sizes). For recurrent networks the input is
// a pair (u, r) and the trailing memory_dim components of the output are the
// next memory (the second projection of Def-style pair maps).

#include <cstddef>
#include <string>
#include <vector>

#include "simet/layer.hpp"

namespace simet {

struct NetworkSpec {
    std::vector<Layer> layers;
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    bool recurrent = false;
    std::size_t memory_dim = 0;

    static NetworkSpec make(std::vector<Layer> layers, bool recurrent = false,
                            std::size_t memory_dim = 0) {
        if (layers.empty()) throw ContractViolation("network must have at least one layer");
        NetworkSpec net;
        net.layers = std::move(layers);
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            validate_layer(net.layers[i], i);
            if (i > 0 && layer_in_dim(net.layers[i]) != layer_out_dim(net.layers[i - 1]))
                throw ContractViolation("layer " + std::to_string(i) + " expects input dim " +
                                        std::to_string(layer_in_dim(net.layers[i])) +
                                        " but layer " + std::to_string(i - 1) + " produces " +
                                        std::to_string(layer_out_dim(net.layers[i - 1])));
        }
        net.input_dim = layer_in_dim(net.layers.front());
        net.output_dim = layer_out_dim(net.layers.back());
        net.recurrent = recurrent;
        net.memory_dim = memory_dim;
        if (recurrent) {
            if (memory_dim == 0) throw ContractViolation("recurrent network needs memory_dim > 0");
            if (memory_dim >= net.input_dim)
                throw ContractViolation("memory_dim must leave room for the current input");
            if (memory_dim > net.output_dim)
                throw ContractViolation("memory_dim exceeds output_dim; no memory to project");
        }
        return net;
    }
};

struct ForwardTrace {
    Vector input;
    std::vector<LayerTrace> layers;
    Vector output;
    bool on_kink = false;
    std::size_t kink_layer = 0;
    std::size_t kink_unit = 0;
};

inline ForwardTrace forward(const NetworkSpec& net, const Vector& x) {
    if (x.size() != net.input_dim)
        throw ShapeError("forward: input dim " + std::to_string(x.size()) + " != " +
                         std::to_string(net.input_dim));
    require_finite(x, "forward input");
    ForwardTrace t;
    t.input = x;
    t.layers.reserve(net.layers.size());
    const Vector* cur = &x;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        t.layers.push_back(layer_forward(net.layers[i], *cur));
        LayerTrace& lt = t.layers.back();
        if (!all_finite(lt.post))
            throw NumericError("forward: non-finite output at layer " + std::to_string(i) + " (" +
                               layer_type_name(net.layers[i]) + ")");
        if (lt.kink && !t.on_kink) {
            t.on_kink = true;
            t.kink_layer = i;
            t.kink_unit = lt.kink_unit;
        }
        cur = &lt.post;
    }
    t.output = *cur;
    return t;
}

namespace detail {

// running = running * J(layer), exploiting the layer structure
inline Matrix accumulate_left(Matrix running, const Layer& layer, const LayerTrace& trace,
                              KinkPolicy policy) {
    auto scale_columns = [](Matrix& m, const Activation& act, const Vector& pre) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double d = activation_derivative(act, pre[j]);
            for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) *= d;
        }
    };
    auto through_activation = [&](Matrix m, const Activation& act, const Vector& pre,
                                  const Vector& post) {
        if (act.kind == ActKind::softmax) return matmul(std::move(m), softmax_jacobian(post));
        scale_columns(m, act, pre);
        return m;
    };

    if (const auto* d = std::get_if<DenseLayer>(&layer.v))
        return matmul(through_activation(std::move(running), d->act, trace.pre, trace.post), d->A);
    if (const auto* c = std::get_if<Conv2DLayer>(&layer.v))
        return matmul(through_activation(std::move(running), c->act, trace.pre, trace.post),
                      *c->matrix);
    if (const auto* p = std::get_if<AvgPoolLayer>(&layer.v)) {
        // each input pixel feeds exactly one pooling window
        const std::size_t oh = p->out_h(), ow = p->out_w();
        const double inv = 1.0 / static_cast<double>(p->window * p->window);
        Matrix out(running.rows(), p->ch * p->in_h * p->in_w);
        for (std::size_t c2 = 0; c2 < p->ch; ++c2)
            for (std::size_t iy = 0; iy < p->in_h; ++iy)
                for (std::size_t ix = 0; ix < p->in_w; ++ix) {
                    const std::size_t oy = iy / p->window, ox = ix / p->window;
                    if (oy >= oh || ox >= ow) continue; // tail pixels are dropped by the pool
                    const std::size_t src = (c2 * oh + oy) * ow + ox;
                    const std::size_t dst = (c2 * p->in_h + iy) * p->in_w + ix;
                    for (std::size_t i = 0; i < running.rows(); ++i)
                        out(i, dst) = running(i, src) * inv;
                }
        return out;
    }
    if (std::get_if<FlattenLayer>(&layer.v)) return running;
    if (const auto* a = std::get_if<ActivationLayer>(&layer.v))
        return through_activation(std::move(running), a->act, trace.pre, trace.post);
    if (const auto* r = std::get_if<ResidualLayer>(&layer.v)) {
        // M * (J_chain + I) = M * J_chain + M
        Matrix tmp = running;
        for (std::size_t i = r->inner.size(); i-- > 0;)
            tmp = accumulate_left(std::move(tmp), r->inner[i], trace.inner[i], policy);
        return running + tmp;
    }
    const auto* m = std::get_if<LSTMCellLayer>(&layer.v);
    return matmul(std::move(running), detail::lstm_jacobian(*m, trace));
}

} // namespace detail

inline Matrix network_jacobian(const NetworkSpec& net, const ForwardTrace& trace,
                               KinkPolicy policy = KinkPolicy::raise_error) {
    if (trace.on_kink && policy == KinkPolicy::raise_error)
        throw OnKinkError(trace.kink_layer, trace.kink_unit);
    Matrix j = Matrix::identity(net.output_dim);
    for (std::size_t i = net.layers.size(); i-- > 0;)
        j = detail::accumulate_left(std::move(j), net.layers[i], trace.layers[i], policy);
    return j;
}

inline Matrix network_jacobian(const NetworkSpec& net, const Vector& x,
                               KinkPolicy policy = KinkPolicy::raise_error) {
    return network_jacobian(net, forward(net, x), policy);
}

// ---------------------------------------------------------------------------
// activation signatures

struct ActivationSignature {
    std::vector<std::uint8_t> states; // one region code per non-differentiable unit
    bool flagged_kink = false;        // some unit sat exactly on a kink

    bool operator==(const ActivationSignature& o) const { return states == o.states; }
    bool operator!=(const ActivationSignature& o) const { return !(*this == o); }
};

inline ActivationSignature activation_signature(const NetworkSpec& net, const ForwardTrace& trace) {
    ActivationSignature sig;
    std::size_t total = 0;
    for (const Layer& l : net.layers) total += nonsmooth_unit_count(l);
    sig.states.reserve(total);
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        append_signature(net.layers[i], trace.layers[i], sig.states);
    sig.flagged_kink = trace.on_kink;
    return sig;
}

inline ActivationSignature activation_signature(const NetworkSpec& net, const Vector& x) {
    return activation_signature(net, forward(net, x));
}

// ---------------------------------------------------------------------------
// recurrent unrolling

struct RecurrentStep {
    Vector u;      // input at time t
    Vector r;      // memory entering time t (r of step 0 is the zero vector)
    Vector output; // full network output at time t; its trailing memory_dim part is r_{t+1}
};

inline std::vector<RecurrentStep> unroll_recurrent(const NetworkSpec& net,
                                                   const std::vector<Vector>& inputs,
                                                   std::size_t steps) {
    if (!net.recurrent) throw ContractViolation("unroll_recurrent: network is not recurrent");
    if (steps > inputs.size())
        throw ContractViolation("unroll_recurrent: steps " + std::to_string(steps) +
                                " exceeds inputs length " + std::to_string(inputs.size()));
    const std::size_t u_dim = net.input_dim - net.memory_dim;
    std::vector<RecurrentStep> out;
    out.reserve(steps);
    Vector r(net.memory_dim); // r_0 = 0
    for (std::size_t t = 0; t < steps; ++t) {
        if (inputs[t].size() != u_dim)
            throw ShapeError("unroll_recurrent: input " + std::to_string(t) + " has dim " +
                             std::to_string(inputs[t].size()) + ", expected " + std::to_string(u_dim));
        ForwardTrace tr = forward(net, concat(inputs[t], r));
        RecurrentStep step;
        step.u = inputs[t];
        step.r = r;
        step.output = tr.output;
        r = slice(tr.output, net.output_dim - net.memory_dim, net.memory_dim);
        out.push_back(std::move(step));
    }
    return out;
}

// Jacobian of u -> N(u, r) at fixed memory r: the leading u-columns of the
// full Jacobian. Each state of a recurrent network has its own equivalence
// classes, so the metric at time t is computed with r frozen.
inline Matrix jacobian_fixed_memory(const NetworkSpec& net, const Vector& u, const Vector& r,
                                    KinkPolicy policy = KinkPolicy::raise_error) {
    if (!net.recurrent) throw ContractViolation("jacobian_fixed_memory: network is not recurrent");
    const std::size_t u_dim = net.input_dim - net.memory_dim;
    if (u.size() != u_dim || r.size() != net.memory_dim)
        throw ShapeError("jacobian_fixed_memory: bad (u, r) dimensions");
    const Matrix full = network_jacobian(net, concat(u, r), policy);
    Matrix ju(full.rows(), u_dim);
    for (std::size_t i = 0; i < full.rows(); ++i)
        for (std::size_t j = 0; j < u_dim; ++j) ju(i, j) = full(i, j);
    return ju;
}

} // namespace simet
