#pragma once

// Layer maps between ambient spaces. Every affine-style layer is a linear
// operator plus optional bias plus activation; convolution and pooling
// operators are materialized once as explicit dense matrices and cached on
// the layer (the pullback needs the full Jacobian matrix anyway). Residual
// blocks wrap an inner chain (output = input + chain(input)), and LSTM cells
// map (x, c, h) -> (c', h').
//
// Image data is kept flattened in channel-major row-major order throughout:
// index = (channel * height + row) * width + col.

#include <cstddef>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "simet/activation.hpp"
#include "simet/errors.hpp"
#include "simet/linalg.hpp"

namespace simet {

struct Layer;

enum class Padding : std::uint8_t { none, zero };

struct DenseLayer {
    Matrix A;
    Vector b;
    Activation act;
};

struct Conv2DLayer {
    std::size_t in_ch = 1, out_ch = 1;
    std::size_t in_h = 0, in_w = 0;
    std::size_t k = 3;
    std::size_t stride = 1;
    Padding padding = Padding::none;
    // kernel weights, [oc][ic][ki][kj] flattened
    std::vector<double> kernels;
    Vector bias; // per output channel
    Activation act;
    std::shared_ptr<const Matrix> matrix; // cached explicit operator

    std::size_t pad() const { return padding == Padding::zero ? (k - 1) / 2 : 0; }
    std::size_t out_h() const { return (in_h + 2 * pad() - k) / stride + 1; }
    std::size_t out_w() const { return (in_w + 2 * pad() - k) / stride + 1; }
    double kernel_at(std::size_t oc, std::size_t ic, std::size_t ki, std::size_t kj) const {
        return kernels[((oc * in_ch + ic) * k + ki) * k + kj];
    }
};

struct AvgPoolLayer {
    std::size_t ch = 1;
    std::size_t in_h = 0, in_w = 0;
    std::size_t window = 2; // stride equals window
    std::shared_ptr<const Matrix> matrix;

    std::size_t out_h() const { return in_h / window; }
    std::size_t out_w() const { return in_w / window; }
};

struct FlattenLayer {
    std::size_t ch = 1, h = 0, w = 0; // identity on the flattened representation
};

struct ActivationLayer {
    std::size_t dim = 0;
    Activation act;
};

struct ResidualLayer {
    std::vector<Layer> inner; // inner chain input dim == output dim
};

struct LSTMCellLayer {
    std::size_t x_dim = 0, hidden = 0;
    // gate order: input, forget, output, candidate
    Matrix Wi, Ui, Wf, Uf, Wo, Uo, Wg, Ug; // W*: hidden x x_dim, U*: hidden x hidden
    Vector bi, bf, bo, bg;
};

struct Layer {
    std::variant<DenseLayer, Conv2DLayer, AvgPoolLayer, FlattenLayer, ActivationLayer, ResidualLayer,
                 LSTMCellLayer>
        v;
};

// ---------------------------------------------------------------------------
// dimensions and validation

std::size_t layer_in_dim(const Layer& layer);
std::size_t layer_out_dim(const Layer& layer);
void validate_layer(Layer& layer, std::size_t index);

inline std::string layer_type_name(const Layer& layer) {
    struct V {
        std::string operator()(const DenseLayer&) const { return "dense"; }
        std::string operator()(const Conv2DLayer&) const { return "conv2d"; }
        std::string operator()(const AvgPoolLayer&) const { return "avgpool"; }
        std::string operator()(const FlattenLayer&) const { return "flatten"; }
        std::string operator()(const ActivationLayer&) const { return "activation"; }
        std::string operator()(const ResidualLayer&) const { return "residual"; }
        std::string operator()(const LSTMCellLayer&) const { return "lstm"; }
    };
    return std::visit(V{}, layer.v);
}

inline std::size_t layer_in_dim(const Layer& layer) {
    struct V {
        std::size_t operator()(const DenseLayer& l) const { return l.A.cols(); }
        std::size_t operator()(const Conv2DLayer& l) const { return l.in_ch * l.in_h * l.in_w; }
        std::size_t operator()(const AvgPoolLayer& l) const { return l.ch * l.in_h * l.in_w; }
        std::size_t operator()(const FlattenLayer& l) const { return l.ch * l.h * l.w; }
        std::size_t operator()(const ActivationLayer& l) const { return l.dim; }
        std::size_t operator()(const ResidualLayer& l) const {
            return l.inner.empty() ? 0 : layer_in_dim(l.inner.front());
        }
        std::size_t operator()(const LSTMCellLayer& l) const { return l.x_dim + 2 * l.hidden; }
    };
    return std::visit(V{}, layer.v);
}

inline std::size_t layer_out_dim(const Layer& layer) {
    struct V {
        std::size_t operator()(const DenseLayer& l) const { return l.A.rows(); }
        std::size_t operator()(const Conv2DLayer& l) const { return l.out_ch * l.out_h() * l.out_w(); }
        std::size_t operator()(const AvgPoolLayer& l) const { return l.ch * l.out_h() * l.out_w(); }
        std::size_t operator()(const FlattenLayer& l) const { return l.ch * l.h * l.w; }
        std::size_t operator()(const ActivationLayer& l) const { return l.dim; }
        std::size_t operator()(const ResidualLayer& l) const {
            return l.inner.empty() ? 0 : layer_out_dim(l.inner.back());
        }
        std::size_t operator()(const LSTMCellLayer& l) const { return 2 * l.hidden; }
    };
    return std::visit(V{}, layer.v);
}

namespace detail {

inline Matrix build_conv_matrix(const Conv2DLayer& l) {
    const std::size_t oh = l.out_h(), ow = l.out_w();
    const std::size_t p = l.pad();
    Matrix m(l.out_ch * oh * ow, l.in_ch * l.in_h * l.in_w);
    for (std::size_t oc = 0; oc < l.out_ch; ++oc)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::size_t row = (oc * oh + oy) * ow + ox;
                for (std::size_t ic = 0; ic < l.in_ch; ++ic)
                    for (std::size_t ki = 0; ki < l.k; ++ki)
                        for (std::size_t kj = 0; kj < l.k; ++kj) {
                            const std::ptrdiff_t iy =
                                static_cast<std::ptrdiff_t>(oy * l.stride + ki) - static_cast<std::ptrdiff_t>(p);
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * l.stride + kj) - static_cast<std::ptrdiff_t>(p);
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(l.in_h) ||
                                ix >= static_cast<std::ptrdiff_t>(l.in_w))
                                continue;
                            const std::size_t col =
                                (ic * l.in_h + static_cast<std::size_t>(iy)) * l.in_w + static_cast<std::size_t>(ix);
                            m(row, col) = l.kernel_at(oc, ic, ki, kj);
                        }
            }
    return m;
}

inline Matrix build_avgpool_matrix(const AvgPoolLayer& l) {
    const std::size_t oh = l.out_h(), ow = l.out_w();
    const double inv = 1.0 / static_cast<double>(l.window * l.window);
    Matrix m(l.ch * oh * ow, l.ch * l.in_h * l.in_w);
    for (std::size_t c = 0; c < l.ch; ++c)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::size_t row = (c * oh + oy) * ow + ox;
                for (std::size_t wy = 0; wy < l.window; ++wy)
                    for (std::size_t wx = 0; wx < l.window; ++wx) {
                        const std::size_t iy = oy * l.window + wy;
                        const std::size_t ix = ox * l.window + wx;
                        m(row, (c * l.in_h + iy) * l.in_w + ix) = inv;
                    }
            }
    return m;
}

} // namespace detail

inline void validate_layer(Layer& layer, std::size_t index) {
    const std::string where = "layer " + std::to_string(index) + " (" + layer_type_name(layer) + "): ";
    if (auto* d = std::get_if<DenseLayer>(&layer.v)) {
        if (d->A.rows() == 0 || d->A.cols() == 0) throw ContractViolation(where + "empty weight matrix");
        if (d->b.size() == 0) d->b = Vector(d->A.rows());
        if (d->b.size() != d->A.rows())
            throw ContractViolation(where + "bias length " + std::to_string(d->b.size()) +
                                    " != rows " + std::to_string(d->A.rows()));
        if (!all_finite(d->A) || !all_finite(d->b)) throw NumericError(where + "non-finite weights");
        validate_activation(d->act);
    } else if (auto* c = std::get_if<Conv2DLayer>(&layer.v)) {
        if (c->k % 2 == 0 || c->k == 0) throw ContractViolation(where + "kernel side must be odd");
        if (c->stride == 0) throw ContractViolation(where + "stride must be positive");
        if (c->in_h < c->k || c->in_w < c->k)
            if (c->padding == Padding::none) throw ContractViolation(where + "kernel larger than input");
        if (c->kernels.size() != c->out_ch * c->in_ch * c->k * c->k)
            throw ContractViolation(where + "kernel blob has wrong length");
        if (c->bias.size() == 0) c->bias = Vector(c->out_ch);
        if (c->bias.size() != c->out_ch) throw ContractViolation(where + "bias length != out channels");
        for (double x : c->kernels)
            if (!std::isfinite(x)) throw NumericError(where + "non-finite kernel");
        validate_activation(c->act);
        c->matrix = std::make_shared<const Matrix>(detail::build_conv_matrix(*c));
    } else if (auto* p = std::get_if<AvgPoolLayer>(&layer.v)) {
        if (p->window == 0) throw ContractViolation(where + "window must be positive");
        if (p->out_h() == 0 || p->out_w() == 0) throw ContractViolation(where + "window larger than input");
        p->matrix = std::make_shared<const Matrix>(detail::build_avgpool_matrix(*p));
    } else if (auto* f = std::get_if<FlattenLayer>(&layer.v)) {
        if (f->ch * f->h * f->w == 0) throw ContractViolation(where + "zero-sized flatten");
    } else if (auto* a = std::get_if<ActivationLayer>(&layer.v)) {
        if (a->dim == 0) throw ContractViolation(where + "zero-dimensional activation layer");
        validate_activation(a->act);
    } else if (auto* r = std::get_if<ResidualLayer>(&layer.v)) {
        if (r->inner.empty()) throw ContractViolation(where + "residual block with no inner layers");
        for (std::size_t i = 0; i < r->inner.size(); ++i) {
            validate_layer(r->inner[i], i);
            if (i > 0 && layer_in_dim(r->inner[i]) != layer_out_dim(r->inner[i - 1]))
                throw ContractViolation(where + "inner chain dimension mismatch at inner layer " +
                                        std::to_string(i));
        }
        if (layer_in_dim(r->inner.front()) != layer_out_dim(r->inner.back()))
            throw ContractViolation(where + "inner chain must map a space to itself");
    } else if (auto* m = std::get_if<LSTMCellLayer>(&layer.v)) {
        const std::size_t H = m->hidden, X = m->x_dim;
        if (H == 0 || X == 0) throw ContractViolation(where + "zero-sized lstm");
        auto check = [&](const Matrix& w, std::size_t r, std::size_t c, const char* name) {
            if (w.rows() != r || w.cols() != c)
                throw ContractViolation(where + std::string(name) + " has wrong shape");
        };
        check(m->Wi, H, X, "Wi"); check(m->Ui, H, H, "Ui");
        check(m->Wf, H, X, "Wf"); check(m->Uf, H, H, "Uf");
        check(m->Wo, H, X, "Wo"); check(m->Uo, H, H, "Uo");
        check(m->Wg, H, X, "Wg"); check(m->Ug, H, H, "Ug");
        for (const Vector* bias : {&m->bi, &m->bf, &m->bo, &m->bg})
            if (bias->size() != H) throw ContractViolation(where + "gate bias has wrong length");
    }
}

// ---------------------------------------------------------------------------
// forward evaluation with trace

struct LayerTrace {
    Vector input;
    Vector pre;  // after linear map + bias (before activation); unused for residual
    Vector post; // layer output
    std::vector<LayerTrace> inner; // residual only
    // LSTM internals, needed for the analytic Jacobian
    Vector gate_i, gate_f, gate_o, gate_g, c_new;
    bool kink = false;
    std::size_t kink_unit = 0;
};

namespace detail {

inline void apply_activation(const Activation& act, LayerTrace& t) {
    if (act.kind == ActKind::softmax) {
        t.post = softmax_value(t.pre);
        return;
    }
    t.post = Vector(t.pre.size());
    for (std::size_t i = 0; i < t.pre.size(); ++i) {
        t.post[i] = activation_value(act, t.pre[i]);
        if (is_nonsmooth(act) && !t.kink && on_kink(act, t.pre[i])) {
            t.kink = true;
            t.kink_unit = i;
        }
    }
}

inline Vector conv_forward_sliding(const Conv2DLayer& l, const Vector& x) {
    const std::size_t oh = l.out_h(), ow = l.out_w();
    const std::size_t p = l.pad();
    Vector out(l.out_ch * oh * ow);
    for (std::size_t oc = 0; oc < l.out_ch; ++oc)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double s = 0.0;
                for (std::size_t ic = 0; ic < l.in_ch; ++ic)
                    for (std::size_t ki = 0; ki < l.k; ++ki)
                        for (std::size_t kj = 0; kj < l.k; ++kj) {
                            const std::ptrdiff_t iy =
                                static_cast<std::ptrdiff_t>(oy * l.stride + ki) - static_cast<std::ptrdiff_t>(p);
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * l.stride + kj) - static_cast<std::ptrdiff_t>(p);
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(l.in_h) ||
                                ix >= static_cast<std::ptrdiff_t>(l.in_w))
                                continue;
                            s += l.kernel_at(oc, ic, ki, kj) *
                                 x[(ic * l.in_h + static_cast<std::size_t>(iy)) * l.in_w +
                                   static_cast<std::size_t>(ix)];
                        }
                out[(oc * oh + oy) * ow + ox] = s + l.bias[oc];
            }
    return out;
}

} // namespace detail

inline LayerTrace layer_forward(const Layer& layer, const Vector& x) {
    if (x.size() != layer_in_dim(layer))
        throw ShapeError("layer_forward (" + layer_type_name(layer) + "): input dim " +
                         std::to_string(x.size()) + " != " + std::to_string(layer_in_dim(layer)));
    LayerTrace t;
    t.input = x;
    if (const auto* d = std::get_if<DenseLayer>(&layer.v)) {
        t.pre = matvec(d->A, x);
        for (std::size_t i = 0; i < t.pre.size(); ++i) t.pre[i] += d->b[i];
        detail::apply_activation(d->act, t);
    } else if (const auto* c = std::get_if<Conv2DLayer>(&layer.v)) {
        t.pre = detail::conv_forward_sliding(*c, x);
        detail::apply_activation(c->act, t);
    } else if (const auto* p = std::get_if<AvgPoolLayer>(&layer.v)) {
        const std::size_t oh = p->out_h(), ow = p->out_w();
        const double inv = 1.0 / static_cast<double>(p->window * p->window);
        t.pre = Vector(p->ch * oh * ow);
        for (std::size_t c2 = 0; c2 < p->ch; ++c2)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    double s = 0.0;
                    for (std::size_t wy = 0; wy < p->window; ++wy)
                        for (std::size_t wx = 0; wx < p->window; ++wx)
                            s += x[(c2 * p->in_h + oy * p->window + wy) * p->in_w + ox * p->window + wx];
                    t.pre[(c2 * oh + oy) * ow + ox] = s * inv;
                }
        t.post = t.pre;
    } else if (std::get_if<FlattenLayer>(&layer.v)) {
        t.pre = x;
        t.post = x;
    } else if (const auto* a = std::get_if<ActivationLayer>(&layer.v)) {
        t.pre = x;
        detail::apply_activation(a->act, t);
    } else if (const auto* r = std::get_if<ResidualLayer>(&layer.v)) {
        Vector cur = x;
        t.inner.reserve(r->inner.size());
        for (const Layer& il : r->inner) {
            t.inner.push_back(layer_forward(il, cur));
            cur = t.inner.back().post;
            if (t.inner.back().kink) t.kink = true;
        }
        t.post = x + cur;
    } else if (const auto* m = std::get_if<LSTMCellLayer>(&layer.v)) {
        const std::size_t H = m->hidden, X = m->x_dim;
        const Vector xin = slice(x, 0, X);
        const Vector c_prev = slice(x, X, H);
        const Vector h_prev = slice(x, X + H, H);
        auto gate = [&](const Matrix& W, const Matrix& U, const Vector& b, bool tanh_gate) {
            Vector z = matvec(W, xin);
            const Vector uh = matvec(U, h_prev);
            for (std::size_t i = 0; i < H; ++i) z[i] += uh[i] + b[i];
            for (std::size_t i = 0; i < H; ++i)
                z[i] = tanh_gate ? std::tanh(z[i]) : sigmoid_value(z[i]);
            return z;
        };
        t.gate_i = gate(m->Wi, m->Ui, m->bi, false);
        t.gate_f = gate(m->Wf, m->Uf, m->bf, false);
        t.gate_o = gate(m->Wo, m->Uo, m->bo, false);
        t.gate_g = gate(m->Wg, m->Ug, m->bg, true);
        t.c_new = Vector(H);
        for (std::size_t i = 0; i < H; ++i)
            t.c_new[i] = t.gate_f[i] * c_prev[i] + t.gate_i[i] * t.gate_g[i];
        Vector h_new(H);
        for (std::size_t i = 0; i < H; ++i) h_new[i] = t.gate_o[i] * std::tanh(t.c_new[i]);
        t.post = concat(t.c_new, h_new);
    }
    return t;
}

// ---------------------------------------------------------------------------
// analytic Jacobians

enum class KinkPolicy : std::uint8_t {
    raise_error,  // throw OnKinkError when a unit sits exactly on a kink
    inactive_side // use the inactive/plateau-side derivative silently
};

Matrix layer_jacobian(const Layer& layer, const LayerTrace& trace,
                      KinkPolicy policy = KinkPolicy::raise_error);

namespace detail {

// rows of `linear` scaled by the activation derivative at `pre`
inline Matrix activation_times_linear(const Activation& act, const Vector& pre, const Vector& post,
                                      const Matrix& linear) {
    if (act.kind == ActKind::softmax) return matmul(softmax_jacobian(post), linear);
    Matrix j = linear;
    for (std::size_t i = 0; i < j.rows(); ++i) {
        const double d = activation_derivative(act, pre[i]);
        double* row = j.row_ptr(i);
        for (std::size_t col = 0; col < j.cols(); ++col) row[col] *= d;
    }
    return j;
}

inline Matrix lstm_jacobian(const LSTMCellLayer& m, const LayerTrace& t) {
    const std::size_t H = m.hidden, X = m.x_dim;
    const Vector c_prev = slice(t.input, X, H);
    Vector di(H), df(H), do_(H), dg(H), tc(H), dtc(H);
    for (std::size_t i = 0; i < H; ++i) {
        di[i] = t.gate_i[i] * (1.0 - t.gate_i[i]);
        df[i] = t.gate_f[i] * (1.0 - t.gate_f[i]);
        do_[i] = t.gate_o[i] * (1.0 - t.gate_o[i]);
        dg[i] = 1.0 - t.gate_g[i] * t.gate_g[i];
        tc[i] = std::tanh(t.c_new[i]);
        dtc[i] = 1.0 - tc[i] * tc[i];
    }
    Matrix j(2 * H, X + 2 * H);
    // dc'/dx and dc'/dh; dc'/dc = diag(f)
    for (std::size_t i = 0; i < H; ++i) {
        const double cf = c_prev[i] * df[i];
        const double gi = t.gate_g[i] * di[i];
        const double ig = t.gate_i[i] * dg[i];
        for (std::size_t col = 0; col < X; ++col)
            j(i, col) = cf * m.Wf(i, col) + gi * m.Wi(i, col) + ig * m.Wg(i, col);
        j(i, X + i) = t.gate_f[i];
        for (std::size_t col = 0; col < H; ++col)
            j(i, X + H + col) = cf * m.Uf(i, col) + gi * m.Ui(i, col) + ig * m.Ug(i, col);
    }
    // dh'/dz = diag(o * tanh'(c')) dc'/dz + diag(tanh(c')) do/dz
    for (std::size_t i = 0; i < H; ++i) {
        const double scale = t.gate_o[i] * dtc[i];
        const double tdo = tc[i] * do_[i];
        for (std::size_t col = 0; col < X; ++col)
            j(H + i, col) = scale * j(i, col) + tdo * m.Wo(i, col);
        for (std::size_t col = 0; col < H; ++col) {
            j(H + i, X + col) = scale * j(i, X + col);
            j(H + i, X + H + col) = scale * j(i, X + H + col) + tdo * m.Uo(i, col);
        }
    }
    return j;
}

} // namespace detail

inline Matrix layer_jacobian(const Layer& layer, const LayerTrace& trace, KinkPolicy policy) {
    if (trace.kink && policy == KinkPolicy::raise_error) throw OnKinkError(0, trace.kink_unit);
    if (const auto* d = std::get_if<DenseLayer>(&layer.v))
        return detail::activation_times_linear(d->act, trace.pre, trace.post, d->A);
    if (const auto* c = std::get_if<Conv2DLayer>(&layer.v))
        return detail::activation_times_linear(c->act, trace.pre, trace.post, *c->matrix);
    if (const auto* p = std::get_if<AvgPoolLayer>(&layer.v)) return *p->matrix;
    if (const auto* f = std::get_if<FlattenLayer>(&layer.v))
        return Matrix::identity(f->ch * f->h * f->w);
    if (const auto* a = std::get_if<ActivationLayer>(&layer.v))
        return detail::activation_times_linear(a->act, trace.pre, trace.post,
                                               Matrix::identity(a->dim));
    if (const auto* r = std::get_if<ResidualLayer>(&layer.v)) {
        // J = J_inner_chain + I (sum of the two projections)
        Matrix j = layer_jacobian(r->inner.front(), trace.inner.front(), policy);
        for (std::size_t i = 1; i < r->inner.size(); ++i)
            j = matmul(layer_jacobian(r->inner[i], trace.inner[i], policy), j);
        for (std::size_t i = 0; i < j.rows(); ++i) j(i, i) += 1.0;
        return j;
    }
    const auto* m = std::get_if<LSTMCellLayer>(&layer.v);
    return detail::lstm_jacobian(*m, trace);
}

// Convenience overload evaluating its own trace.
inline Matrix layer_jacobian(const Layer& layer, const Vector& input,
                             KinkPolicy policy = KinkPolicy::raise_error) {
    return layer_jacobian(layer, layer_forward(layer, input), policy);
}

// Number of non-differentiable units this layer contributes to the signature.
inline std::size_t nonsmooth_unit_count(const Layer& layer) {
    if (const auto* d = std::get_if<DenseLayer>(&layer.v))
        return is_nonsmooth(d->act) ? d->A.rows() : 0;
    if (const auto* c = std::get_if<Conv2DLayer>(&layer.v))
        return is_nonsmooth(c->act) ? c->out_ch * c->out_h() * c->out_w() : 0;
    if (const auto* a = std::get_if<ActivationLayer>(&layer.v))
        return is_nonsmooth(a->act) ? a->dim : 0;
    if (const auto* r = std::get_if<ResidualLayer>(&layer.v)) {
        std::size_t n = 0;
        for (const Layer& il : r->inner) n += nonsmooth_unit_count(il);
        return n;
    }
    return 0;
}

// Append this layer's region codes to a signature, in evaluation order.
inline void append_signature(const Layer& layer, const LayerTrace& trace,
                             std::vector<std::uint8_t>& out) {
    auto emit = [&out](const Activation& act, const Vector& pre) {
        if (!is_nonsmooth(act)) return;
        for (std::size_t i = 0; i < pre.size(); ++i) out.push_back(region_code(act, pre[i]));
    };
    if (const auto* d = std::get_if<DenseLayer>(&layer.v)) emit(d->act, trace.pre);
    else if (const auto* c = std::get_if<Conv2DLayer>(&layer.v)) emit(c->act, trace.pre);
    else if (const auto* a = std::get_if<ActivationLayer>(&layer.v)) emit(a->act, trace.pre);
    else if (const auto* r = std::get_if<ResidualLayer>(&layer.v))
        for (std::size_t i = 0; i < r->inner.size(); ++i)
            append_signature(r->inner[i], trace.inner[i], out);
}

// Product of per-layer operator-norm and activation-slope bounds; used by
// suggest_tau. LSTM cells have no global bound (the cell state is unbounded).
inline double layer_lipschitz_bound(const Layer& layer) {
    if (const auto* d = std::get_if<DenseLayer>(&layer.v))
        return spectral_upper_bound(d->A) * derivative_bound(d->act);
    if (const auto* c = std::get_if<Conv2DLayer>(&layer.v))
        return spectral_upper_bound(*c->matrix) * derivative_bound(c->act);
    if (const auto* p = std::get_if<AvgPoolLayer>(&layer.v)) return spectral_upper_bound(*p->matrix);
    if (std::get_if<FlattenLayer>(&layer.v)) return 1.0;
    if (const auto* a = std::get_if<ActivationLayer>(&layer.v)) return derivative_bound(a->act);
    if (const auto* r = std::get_if<ResidualLayer>(&layer.v)) {
        double prod = 1.0;
        for (const Layer& il : r->inner) prod *= layer_lipschitz_bound(il);
        return 1.0 + prod;
    }
    throw UnsupportedError("no global Lipschitz bound for lstm cells without a declared state box");
}

} // namespace simet
