#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scomp/errors.hpp"
#include "scomp/param_store.hpp"

// Eager reverse-mode autodiff over vector operations. Values are computed as
// nodes are created; backward() walks the nodes in reverse and accumulates
// gradients, so fan-out (a node consumed twice) sums naturally.
//
// Leaves either copy their data into the tape arena (constant) or view
// caller-owned storage (view); views must outlive the tape pass. Gradients are
// kept per node, allocated only when backward() runs, which keeps pure forward
// evaluation (sampling) allocation-light when the tape is reused via reset().

namespace scomp {

template <class Real>
class Tape {
public:
    struct Var {
        int32_t id = -1;
        bool valid() const { return id >= 0; }
    };

    void reset() {
        nodes_.clear();
        val_.clear();
        grad_.clear();
        total_len_ = 0;
    }

    // --- leaves ---------------------------------------------------------

    Var constant(std::span<const Real> v) {
        Var out = make_node(Op::leaf, int32_t(v.size()));
        std::copy(v.begin(), v.end(), val_ptr(out));
        return out;
    }

    Var constant_scalar(Real v) { return constant(std::span<const Real>(&v, 1)); }

    // zero-copy view of caller storage (parameters); caller must keep it alive
    Var view(std::span<const Real> v) {
        Node nd{Op::leaf, -1, -1, -1, int32_t(v.size()), Real(0), 0, v.data()};
        nd.goff = total_len_;
        total_len_ += int32_t(v.size());
        nodes_.push_back(nd);
        return Var{int32_t(nodes_.size() - 1)};
    }

    // --- ops -------------------------------------------------------------

    // y = W x + b with W of shape (m, n) row-major, b of length m
    Var linear(Var w, Var b, Var x) {
        const int32_t n = len(x), m = len(b);
        if (int64_t(m) * n != len(w)) throw ConfigError("tape linear: weight shape mismatch");
        Var out = make_node(Op::linear, m, w, b, x);  // parents: a=W, b=bias, c=x
        const Real* wp = value(w).data();
        const Real* xp = value(x).data();
        const Real* bp = value(b).data();
        Real* yp = val_ptr(out);
        for (int32_t i = 0; i < m; ++i) {
            double acc = double(bp[i]);
            const Real* row = wp + int64_t(i) * n;
            for (int32_t j = 0; j < n; ++j) acc += double(row[j]) * double(xp[j]);
            yp[i] = Real(acc);
        }
        return out;
    }

    Var add(Var a, Var b) { return binary(Op::add, a, b); }
    Var sub(Var a, Var b) { return binary(Op::sub, a, b); }
    Var mul(Var a, Var b) { return binary(Op::mul, a, b); }

    Var scale(Var a, Real c) {
        Var out = make_node(Op::scale, len(a), a);
        nodes_[out.id].p0 = c;
        const Real* ap = value(a).data();
        Real* yp = val_ptr(out);
        for (int32_t i = 0; i < len(a); ++i) yp[i] = c * ap[i];
        return out;
    }

    Var silu(Var a) {
        Var out = make_node(Op::silu, len(a), a);
        const Real* ap = value(a).data();
        Real* yp = val_ptr(out);
        for (int32_t i = 0; i < len(a); ++i) {
            const Real s = Real(1) / (Real(1) + std::exp(-ap[i]));
            yp[i] = ap[i] * s;
        }
        return out;
    }

    // per contiguous group: (x - mean) / sqrt(var + eps), population variance
    Var group_norm(Var a, int32_t group_size, Real eps) {
        if (group_size < 1 || len(a) % group_size != 0)
            throw ConfigError("tape group_norm: length not divisible by group size");
        Var out = make_node(Op::group_norm, len(a), a);
        nodes_[out.id].p0 = eps;
        nodes_[out.id].i0 = group_size;
        const Real* ap = value(a).data();
        Real* yp = val_ptr(out);
        for (int32_t g0 = 0; g0 < len(a); g0 += group_size) {
            double mean = 0.0;
            for (int32_t i = 0; i < group_size; ++i) mean += double(ap[g0 + i]);
            mean /= group_size;
            double var = 0.0;
            for (int32_t i = 0; i < group_size; ++i) {
                const double dvi = double(ap[g0 + i]) - mean;
                var += dvi * dvi;
            }
            var /= group_size;
            const double inv = 1.0 / std::sqrt(var + double(eps));
            for (int32_t i = 0; i < group_size; ++i)
                yp[g0 + i] = Real((double(ap[g0 + i]) - mean) * inv);
        }
        return out;
    }

    // scalar sum of squares
    Var sum_squares(Var a) {
        Var out = make_node(Op::sum_squares, 1, a);
        const Real* ap = value(a).data();
        double acc = 0.0;
        for (int32_t i = 0; i < len(a); ++i) acc += double(ap[i]) * double(ap[i]);
        *val_ptr(out) = Real(acc);
        return out;
    }

    Var sum(Var a) {
        Var out = make_node(Op::sum, 1, a);
        const Real* ap = value(a).data();
        double acc = 0.0;
        for (int32_t i = 0; i < len(a); ++i) acc += double(ap[i]);
        *val_ptr(out) = Real(acc);
        return out;
    }

    Var dot(Var a, Var b) {
        if (len(a) != len(b)) throw ConfigError("tape dot: length mismatch");
        Var out = make_node(Op::dot, 1, a, b);
        const Real* ap = value(a).data();
        const Real* bp = value(b).data();
        double acc = 0.0;
        for (int32_t i = 0; i < len(a); ++i) acc += double(ap[i]) * double(bp[i]);
        *val_ptr(out) = Real(acc);
        return out;
    }

    // --- access ----------------------------------------------------------

    std::span<const Real> value(Var v) const {
        const Node& n = nodes_[v.id];
        return {n.ext ? n.ext : val_.data() + n.off, size_t(n.n)};
    }

    int32_t len(Var v) const { return nodes_[v.id].n; }

    std::span<const Real> gradient(Var v) const {
        const Node& n = nodes_[v.id];
        return {grad_.data() + n.goff, size_t(n.n)};
    }

    // --- backward --------------------------------------------------------

    void backward(Var root) {
        if (len(root) != 1) throw ConfigError("tape backward: root must be scalar");
        grad_.assign(total_len_, Real(0));
        grad_[nodes_[root.id].goff] = Real(1);
        for (int32_t id = int32_t(nodes_.size()) - 1; id >= 0; --id) {
            const Node& nd = nodes_[id];
            if (nd.op == Op::leaf) continue;
            const Real* g = grad_.data() + nd.goff;
            switch (nd.op) {
                case Op::linear: {
                    const Node& wn = nodes_[nd.a];
                    const Node& xn = nodes_[nd.c];
                    const int32_t m = nd.n, n = xn.n;
                    const Real* wp = wn.ext ? wn.ext : val_.data() + wn.off;
                    const Real* xp = xn.ext ? xn.ext : val_.data() + xn.off;
                    Real* gw = grad_.data() + wn.goff;
                    Real* gx = grad_.data() + xn.goff;
                    Real* gb = grad_.data() + nodes_[nd.b].goff;
                    for (int32_t i = 0; i < m; ++i) {
                        const Real gi = g[i];
                        if (gi == Real(0)) continue;
                        gb[i] += gi;
                        const Real* row = wp + int64_t(i) * n;
                        Real* gwrow = gw + int64_t(i) * n;
                        for (int32_t j = 0; j < n; ++j) {
                            gwrow[j] += gi * xp[j];
                            gx[j] += gi * row[j];
                        }
                    }
                    break;
                }
                case Op::add: {
                    Real* ga = grad_.data() + nodes_[nd.a].goff;
                    Real* gb = grad_.data() + nodes_[nd.b].goff;
                    for (int32_t i = 0; i < nd.n; ++i) {
                        ga[i] += g[i];
                        gb[i] += g[i];
                    }
                    break;
                }
                case Op::sub: {
                    Real* ga = grad_.data() + nodes_[nd.a].goff;
                    Real* gb = grad_.data() + nodes_[nd.b].goff;
                    for (int32_t i = 0; i < nd.n; ++i) {
                        ga[i] += g[i];
                        gb[i] -= g[i];
                    }
                    break;
                }
                case Op::mul: {
                    const Real* av = node_val(nd.a);
                    const Real* bv = node_val(nd.b);
                    Real* ga = grad_.data() + nodes_[nd.a].goff;
                    Real* gb = grad_.data() + nodes_[nd.b].goff;
                    for (int32_t i = 0; i < nd.n; ++i) {
                        ga[i] += g[i] * bv[i];
                        gb[i] += g[i] * av[i];
                    }
                    break;
                }
                case Op::scale: {
                    Real* ga = grad_.data() + nodes_[nd.a].goff;
                    for (int32_t i = 0; i < nd.n; ++i) ga[i] += nd.p0 * g[i];
                    break;
                }
                case Op::silu: {
                    const Real* av = node_val(nd.a);
                    Real* ga = grad_.data() + nodes_[nd.a].goff;
                    for (int32_t i = 0; i < nd.n; ++i) {
                        const Real s = Real(1) / (Real(1) + std::exp(-av[i]));
                        ga[i] += g[i] * s * (Real(1) + av[i] * (Real(1) - s));
                    }
                    break;
                }
                case Op::group_norm: {
                    const Real* yv = val_.data() + nd.off;
                    const Real* av = node_val(nd.a);
                    Real* ga = grad_.data() + nodes_[nd.a].goff;
                    const int32_t gs = nd.i0;
                    for (int32_t g0 = 0; g0 < nd.n; g0 += gs) {
                        double mean = 0.0, var = 0.0, gmean = 0.0, gymean = 0.0;
                        for (int32_t i = 0; i < gs; ++i) {
                            mean += double(av[g0 + i]);
                            gmean += double(g[g0 + i]);
                            gymean += double(g[g0 + i]) * double(yv[g0 + i]);
                        }
                        mean /= gs;
                        gmean /= gs;
                        gymean /= gs;
                        for (int32_t i = 0; i < gs; ++i) {
                            const double dvi = double(av[g0 + i]) - mean;
                            var += dvi * dvi;
                        }
                        var /= gs;
                        const double inv = 1.0 / std::sqrt(var + double(nd.p0));
                        for (int32_t i = 0; i < gs; ++i)
                            ga[g0 + i] += Real(inv * (double(g[g0 + i]) - gmean - double(yv[g0 + i]) * gymean));
                    }
                    break;
                }
                case Op::sum_squares: {
                    const Real* av = node_val(nd.a);
                    Real* ga = grad_.data() + nodes_[nd.a].goff;
                    const Real g0 = g[0];
                    for (int32_t i = 0; i < nodes_[nd.a].n; ++i) ga[i] += Real(2) * g0 * av[i];
                    break;
                }
                case Op::sum: {
                    Real* ga = grad_.data() + nodes_[nd.a].goff;
                    const Real g0 = g[0];
                    for (int32_t i = 0; i < nodes_[nd.a].n; ++i) ga[i] += g0;
                    break;
                }
                case Op::dot: {
                    const Real* av = node_val(nd.a);
                    const Real* bv = node_val(nd.b);
                    Real* ga = grad_.data() + nodes_[nd.a].goff;
                    Real* gb = grad_.data() + nodes_[nd.b].goff;
                    const Real g0 = g[0];
                    for (int32_t i = 0; i < nodes_[nd.a].n; ++i) {
                        ga[i] += g0 * bv[i];
                        gb[i] += g0 * av[i];
                    }
                    break;
                }
                case Op::leaf: break;
            }
        }
    }

    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : uint8_t { leaf, linear, add, sub, mul, scale, silu, group_norm, sum_squares, sum, dot };

    struct Node {
        Op op;
        int32_t a, b, c;  // parents
        int32_t n;        // output length
        Real p0;          // scalar payload (scale factor, eps)
        int32_t i0;       // int payload (group size)
        const Real* ext;  // external value storage, or null for arena
        int32_t off = 0;  // arena value offset when ext == null
        int32_t goff = 0; // gradient offset
    };

    Var make_node(Op op, int32_t n, Var a = {}, Var b = {}, Var c = {}) {
        Node nd{op, a.id, b.id, c.id, n, Real(0), 0, nullptr};
        nd.off = int32_t(val_.size());
        val_.resize(val_.size() + size_t(n), Real(0));
        nd.goff = total_len_;
        total_len_ += n;
        nodes_.push_back(nd);
        return Var{int32_t(nodes_.size() - 1)};
    }

    Var binary(Op op, Var a, Var b) {
        if (len(a) != len(b)) throw ConfigError("tape: elementwise length mismatch");
        Var out = make_node(op, len(a), a, b);
        const Real* ap = value(a).data();
        const Real* bp = value(b).data();
        Real* yp = val_ptr(out);
        switch (op) {
            case Op::add:
                for (int32_t i = 0; i < len(a); ++i) yp[i] = ap[i] + bp[i];
                break;
            case Op::sub:
                for (int32_t i = 0; i < len(a); ++i) yp[i] = ap[i] - bp[i];
                break;
            case Op::mul:
                for (int32_t i = 0; i < len(a); ++i) yp[i] = ap[i] * bp[i];
                break;
            default: throw ConfigError("tape: bad binary op");
        }
        return out;
    }

    Real* val_ptr(Var v) { return val_.data() + nodes_[v.id].off; }
    const Real* node_val(int32_t id) const {
        const Node& n = nodes_[id];
        return n.ext ? n.ext : val_.data() + n.off;
    }

    std::vector<Node> nodes_;
    std::vector<Real> val_;
    std::vector<Real> grad_;
    int32_t total_len_ = 0;
};

// Lazily binds ParamStore entries as tape views; the vars are shared across a
// whole graph so gradients accumulate over every use.
template <class Real>
class BoundParams {
public:
    BoundParams(Tape<Real>& tape, const ParamStore<Real>& store) : tape_(&tape), store_(&store) {
        vars_.resize(store.size());
    }

    typename Tape<Real>::Var operator[](const std::string& name) const {
        return by_index(store_->index_of(name));
    }

    typename Tape<Real>::Var by_index(size_t i) const {
        if (!vars_[i].valid()) vars_[i] = tape_->view(store_->entries()[i].values);
        return vars_[i];
    }

    // gradient of each bound entry, zero for entries the graph never touched
    ParamStore<Real> collect_gradients() const {
        ParamStore<Real> out = ParamStore<Real>::like(*store_);
        auto& dst = out.entries();
        for (size_t i = 0; i < vars_.size(); ++i) {
            if (!vars_[i].valid()) continue;
            auto g = tape_->gradient(vars_[i]);
            std::copy(g.begin(), g.end(), dst[i].values.begin());
        }
        return out;
    }

    const ParamStore<Real>& store() const { return *store_; }

private:
    Tape<Real>* tape_;
    const ParamStore<Real>* store_;
    mutable std::vector<typename Tape<Real>::Var> vars_;
};

// Reverse-mode gradient of an arbitrary scalar loss built from tape ops.
// builder: (Tape<Real>&, BoundParams<Real>&) -> Var (scalar). Returns the loss
// value and fills grad_out (shaped like params).
template <class Real, class Builder>
Real grad(const ParamStore<Real>& params, Builder&& builder, ParamStore<Real>& grad_out) {
    Tape<Real> tape;
    BoundParams<Real> bp(tape, params);
    typename Tape<Real>::Var loss = builder(tape, bp);
    const Real loss_value = tape.value(loss)[0];
    if (!std::isfinite(double(loss_value))) throw NumericError("grad: non-finite loss");
    tape.backward(loss);
    grad_out = bp.collect_gradients();
    return loss_value;
}

}  // namespace scomp
