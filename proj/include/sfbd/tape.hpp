#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sfbd/errors.hpp"
#include "sfbd/vecmath.hpp"

namespace sfbd {

enum class Activation { SmoothRelu, Tanh };

inline double softplus(double x) {
    // log(1+e^x) with the usual overflow guard; derivative is the sigmoid.
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::SmoothRelu: return softplus(x);
        case Activation::Tanh: return std::tanh(x);
    }
    throw UnsupportedOpError("apply_activation: unknown activation code " +
                             std::to_string(static_cast<int>(a)));
}

inline double activation_derivative(Activation a, double x) {
    switch (a) {
        case Activation::SmoothRelu: return sigmoid(x);
        case Activation::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
    }
    throw UnsupportedOpError("activation_derivative: unknown activation code " +
                             std::to_string(static_cast<int>(a)));
}

// y = W x + b with W (out x in, row-major) and b stored as slices of a flat
// parameter vector. Shared by the plain forward pass and the tape so both
// produce bit-identical values.
inline void affine_apply(const ParamVector& params, std::size_t w_off, std::size_t b_off,
                         int in_dim, int out_dim, const double* x, double* y) {
    for (int i = 0; i < out_dim; ++i) {
        double s = params[b_off + static_cast<std::size_t>(i)];
        const double* w = &params[w_off + static_cast<std::size_t>(i) * in_dim];
        for (int j = 0; j < in_dim; ++j) s += w[j] * x[j];
        y[i] = s;
    }
}

// Reverse-mode tape over vector-valued nodes. The registered primitives are
// exactly what the training losses need: constants, parameter affine maps,
// elementwise activations, add/sub, scaling, squared norms and weighted sums.
// Anything else is rejected as an unsupported op.
class Tape {
public:
    struct Var {
        int id = -1;
        int dim = 0;
    };

    explicit Tape(const ParamVector& params) : params_(&params) {}

    Var constant(Point value) {
        Node n;
        n.op = Op::Constant;
        n.value = std::move(value);
        return push(std::move(n));
    }

    Var affine(Var x, std::size_t w_off, std::size_t b_off, int out_dim) {
        const Node& xn = node(x);
        Node n;
        n.op = Op::Affine;
        n.a = x.id;
        n.w_off = w_off;
        n.b_off = b_off;
        n.in_dim = x.dim;
        n.value.resize(out_dim);
        if (w_off + static_cast<std::size_t>(out_dim) * x.dim > params_->size() ||
            b_off + static_cast<std::size_t>(out_dim) > params_->size()) {
            throw ContractViolation("Tape::affine: parameter slice out of range");
        }
        affine_apply(*params_, w_off, b_off, x.dim, out_dim, xn.value.data(), n.value.data());
        return push(std::move(n));
    }

    Var activation(Var x, Activation a) {
        if (a != Activation::SmoothRelu && a != Activation::Tanh) {
            throw UnsupportedOpError("Tape::activation: unregistered activation code " +
                                     std::to_string(static_cast<int>(a)));
        }
        const Node& xn = node(x);
        Node n;
        n.op = Op::Act;
        n.a = x.id;
        n.act = a;
        n.value.resize(x.dim);
        for (int i = 0; i < x.dim; ++i) n.value[i] = apply_activation(a, xn.value[i]);
        return push(std::move(n));
    }

    Var add(Var a, Var b) { return binary(Op::Add, a, b); }
    Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }

    Var scale(Var x, double c) {
        const Node& xn = node(x);
        Node n;
        n.op = Op::Scale;
        n.a = x.id;
        n.c = c;
        n.value = scaled(xn.value, c);
        return push(std::move(n));
    }

    // c * x + k, with k a constant vector. Used for the denoiser skip branch.
    Var scale_add_const(Var x, double c, Point k) {
        const Node& xn = node(x);
        check_same_dim(xn.value, k, "Tape::scale_add_const");
        Node n;
        n.op = Op::ScaleAddConst;
        n.a = x.id;
        n.c = c;
        n.value.resize(x.dim);
        for (int i = 0; i < x.dim; ++i) n.value[i] = c * xn.value[i] + k[i];
        return push(std::move(n));
    }

    Var squared_norm(Var x) {
        const Node& xn = node(x);
        Node n;
        n.op = Op::SquaredNorm;
        n.a = x.id;
        n.value = {dot(xn.value, xn.value)};
        return push(std::move(n));
    }

    // sum_i coeffs[i] * vars[i]; all vars share a dimension. Weighted batch
    // means and quadrature sums both come through here.
    Var weighted_sum(const std::vector<Var>& vars, const std::vector<double>& coeffs) {
        if (vars.empty() || vars.size() != coeffs.size()) {
            throw ContractViolation("Tape::weighted_sum: empty terms or size mismatch");
        }
        Node n;
        n.op = Op::WeightedSum;
        n.terms.reserve(vars.size());
        n.coeffs = coeffs;
        n.value.assign(vars[0].dim, 0.0);
        for (std::size_t i = 0; i < vars.size(); ++i) {
            const Node& vn = node(vars[i]);
            check_same_dim(n.value, vn.value, "Tape::weighted_sum");
            n.terms.push_back(vars[i].id);
            axpy(coeffs[i], vn.value, n.value);
        }
        return push(std::move(n));
    }

    double value(Var v) const {
        const Node& n = node(v);
        if (n.value.size() != 1) throw ContractViolation("Tape::value: node is not scalar");
        return n.value[0];
    }

    const Point& vector_value(Var v) const { return node(v).value; }

    // Reverse sweep from a scalar node; returns dloss/dparams.
    ParamVector gradient(Var loss) {
        const Node& ln = node(loss);
        if (ln.value.size() != 1) throw ContractViolation("Tape::gradient: loss must be scalar");
        ParamVector pgrad(params_->size(), 0.0);
        std::vector<Point> adj(nodes_.size());
        adj[loss.id] = {1.0};
        for (int id = loss.id; id >= 0; --id) {
            Node& n = nodes_[id];
            if (adj[id].empty()) continue;
            const Point& g = adj[id];
            switch (n.op) {
                case Op::Constant:
                    break;
                case Op::Affine: {
                    const Point& x = nodes_[n.a].value;
                    const int out_dim = static_cast<int>(n.value.size());
                    Point& ga = grow(adj, n.a, n.in_dim);
                    for (int i = 0; i < out_dim; ++i) {
                        const double gi = g[i];
                        pgrad[n.b_off + static_cast<std::size_t>(i)] += gi;
                        double* gw = &pgrad[n.w_off + static_cast<std::size_t>(i) * n.in_dim];
                        const double* w = &(*params_)[n.w_off + static_cast<std::size_t>(i) * n.in_dim];
                        for (int j = 0; j < n.in_dim; ++j) {
                            gw[j] += gi * x[j];
                            ga[j] += gi * w[j];
                        }
                    }
                    break;
                }
                case Op::Act: {
                    const Point& x = nodes_[n.a].value;
                    Point& ga = grow(adj, n.a, static_cast<int>(x.size()));
                    for (std::size_t i = 0; i < x.size(); ++i) {
                        ga[i] += g[i] * activation_derivative(n.act, x[i]);
                    }
                    break;
                }
                case Op::Add: {
                    axpy(1.0, g, grow(adj, n.a, static_cast<int>(g.size())));
                    axpy(1.0, g, grow(adj, n.b, static_cast<int>(g.size())));
                    break;
                }
                case Op::Sub: {
                    axpy(1.0, g, grow(adj, n.a, static_cast<int>(g.size())));
                    axpy(-1.0, g, grow(adj, n.b, static_cast<int>(g.size())));
                    break;
                }
                case Op::Scale:
                case Op::ScaleAddConst: {
                    axpy(n.c, g, grow(adj, n.a, static_cast<int>(g.size())));
                    break;
                }
                case Op::SquaredNorm: {
                    const Point& x = nodes_[n.a].value;
                    Point& ga = grow(adj, n.a, static_cast<int>(x.size()));
                    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += 2.0 * g[0] * x[i];
                    break;
                }
                case Op::WeightedSum: {
                    for (std::size_t i = 0; i < n.terms.size(); ++i) {
                        axpy(n.coeffs[i], g, grow(adj, n.terms[i], static_cast<int>(g.size())));
                    }
                    break;
                }
                default:
                    throw UnsupportedOpError("Tape::gradient: unregistered op code " +
                                             std::to_string(static_cast<int>(n.op)));
            }
        }
        return pgrad;
    }

    std::size_t size() const { return nodes_.size(); }

private:
    enum class Op { Constant, Affine, Act, Add, Sub, Scale, ScaleAddConst, SquaredNorm, WeightedSum };

    struct Node {
        Op op = Op::Constant;
        int a = -1;
        int b = -1;
        std::size_t w_off = 0;
        std::size_t b_off = 0;
        int in_dim = 0;
        double c = 0.0;
        Activation act = Activation::SmoothRelu;
        std::vector<int> terms;
        std::vector<double> coeffs;
        Point value;
    };

    Var binary(Op op, Var a, Var b) {
        const Node& an = node(a);
        const Node& bn = node(b);
        check_same_dim(an.value, bn.value, "Tape::binary");
        Node n;
        n.op = op;
        n.a = a.id;
        n.b = b.id;
        n.value = (op == Op::Add) ? added(an.value, bn.value) : subtracted(an.value, bn.value);
        return push(std::move(n));
    }

    Var push(Node&& n) {
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1,
                   static_cast<int>(nodes_.back().value.size())};
    }

    const Node& node(Var v) const {
        if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
            throw ContractViolation("Tape: invalid var id");
        }
        return nodes_[v.id];
    }

    static Point& grow(std::vector<Point>& adj, int id, int dim) {
        if (adj[id].empty()) adj[id].assign(dim, 0.0);
        return adj[id];
    }

    const ParamVector* params_;
    std::vector<Node> nodes_;
};

}  // namespace sfbd
