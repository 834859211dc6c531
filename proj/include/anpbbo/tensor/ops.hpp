#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "anpbbo/tensor/tape.hpp"

namespace anpbbo::tensor {

namespace detail {

inline void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ConfigurationError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                                 shape_string(b));
}

inline double stable_sigmoid(double x)
{
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double stable_softplus(double x)
{
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

/// a (n x k) times b (k x m).
inline Var matmul(Tape& t, Var a, Var b)
{
    const Tensor2& av = t.value(a);
    const Tensor2& bv = t.value(b);
    if (av.cols() != bv.rows())
        throw ConfigurationError("matmul: inner dimensions differ " + shape_string(av) + " * " +
                                 shape_string(bv));
    Tensor2 out(av.rows(), bv.cols());
    out.noalias() = av * bv;
    t.count_multiply_adds(static_cast<std::uint64_t>(av.rows() * av.cols() * bv.cols()));
    return t.push(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor2& g, Var) {
        if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
        if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
    });
}

/// a (n x k) times transpose(b) with b (m x k).
inline Var matmul_bt(Tape& t, Var a, Var b)
{
    const Tensor2& av = t.value(a);
    const Tensor2& bv = t.value(b);
    if (av.cols() != bv.cols())
        throw ConfigurationError("matmul_bt: inner dimensions differ " + shape_string(av) + " * " +
                                 shape_string(bv) + "^T");
    Tensor2 out(av.rows(), bv.rows());
    out.noalias() = av * bv.transpose();
    t.count_multiply_adds(static_cast<std::uint64_t>(av.rows() * av.cols() * bv.rows()));
    return t.push(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor2& g, Var) {
        if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b));
        if (tp.requires_grad(b)) tp.accumulate(b, g.transpose() * tp.value(a));
    });
}

/// x (n x m) plus a 1 x m row added to every row.
inline Var add_row(Tape& t, Var x, Var row)
{
    const Tensor2& xv = t.value(x);
    const Tensor2& rv = t.value(row);
    if (rv.rows() != 1 || rv.cols() != xv.cols())
        throw ConfigurationError("add_row: expected 1x" + std::to_string(xv.cols()) + " row, got " +
                                 shape_string(rv));
    Tensor2 out = xv.rowwise() + rv.row(0);
    return t.push(std::move(out), {x, row}, [x, row](Tape& tp, const Tensor2& g, Var) {
        tp.accumulate(x, g);
        if (tp.requires_grad(row)) tp.accumulate(row, g.colwise().sum());
    });
}

inline Var add(Tape& t, Var a, Var b)
{
    detail::require_same_shape(t.value(a), t.value(b), "add");
    Tensor2 out = t.value(a) + t.value(b);
    return t.push(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor2& g, Var) {
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

inline Var sub(Tape& t, Var a, Var b)
{
    detail::require_same_shape(t.value(a), t.value(b), "sub");
    Tensor2 out = t.value(a) - t.value(b);
    return t.push(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor2& g, Var) {
        tp.accumulate(a, g);
        if (tp.requires_grad(b)) tp.accumulate(b, -g);
    });
}

/// Elementwise product.
inline Var mul(Tape& t, Var a, Var b)
{
    detail::require_same_shape(t.value(a), t.value(b), "mul");
    Tensor2 out = t.value(a).cwiseProduct(t.value(b));
    return t.push(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor2& g, Var) {
        if (tp.requires_grad(a)) tp.accumulate(a, g.cwiseProduct(tp.value(b)));
        if (tp.requires_grad(b)) tp.accumulate(b, g.cwiseProduct(tp.value(a)));
    });
}

inline Var scale(Tape& t, Var a, double s)
{
    Tensor2 out = t.value(a) * s;
    return t.push(std::move(out), {a}, [a, s](Tape& tp, const Tensor2& g, Var) { tp.accumulate(a, g * s); });
}

// ---------------------------------------------------------------------------
// Shape manipulation

/// Columns [start, start + count) of a.
inline Var col_slice(Tape& t, Var a, Eigen::Index start, Eigen::Index count)
{
    const Tensor2& av = t.value(a);
    if (start < 0 || count < 0 || start + count > av.cols())
        throw ConfigurationError("col_slice: range out of bounds for " + shape_string(av));
    Tensor2 out = av.middleCols(start, count);
    const Eigen::Index rows = av.rows();
    const Eigen::Index cols = av.cols();
    return t.push(std::move(out), {a}, [a, start, count, rows, cols](Tape& tp, const Tensor2& g, Var) {
        Tensor2 full = Tensor2::Zero(rows, cols);
        full.middleCols(start, count) = g;
        tp.accumulate(a, full);
    });
}

/// Horizontal concatenation; every part must have the same row count.
inline Var concat_cols(Tape& t, const std::vector<Var>& parts)
{
    if (parts.empty()) throw ConfigurationError("concat_cols: no inputs");
    const Eigen::Index rows = t.value(parts.front()).rows();
    Eigen::Index cols = 0;
    for (Var p : parts) {
        if (t.value(p).rows() != rows)
            throw ConfigurationError("concat_cols: row count mismatch " + shape_string(t.value(p)));
        cols += t.value(p).cols();
    }
    Tensor2 out(rows, cols);
    std::vector<Eigen::Index> offsets;
    Eigen::Index at = 0;
    for (Var p : parts) {
        const Tensor2& pv = t.value(p);
        out.middleCols(at, pv.cols()) = pv;
        offsets.push_back(at);
        at += pv.cols();
    }
    return t.push(std::move(out), parts, [parts, offsets](Tape& tp, const Tensor2& g, Var) {
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (!tp.requires_grad(parts[i])) continue;
            tp.accumulate(parts[i], g.middleCols(offsets[i], tp.value(parts[i]).cols()));
        }
    });
}

/// Column-wise mean over rows: (n x m) -> (1 x m).
inline Var mean_rows(Tape& t, Var a)
{
    const Tensor2& av = t.value(a);
    if (av.rows() == 0) throw PreconditionError("mean_rows: empty input");
    const double inv = 1.0 / static_cast<double>(av.rows());
    Tensor2 out = av.colwise().sum() * inv;
    const Eigen::Index rows = av.rows();
    return t.push(std::move(out), {a}, [a, inv, rows](Tape& tp, const Tensor2& g, Var) {
        tp.accumulate(a, g.replicate(rows, 1) * inv);
    });
}

/// Repeat a 1 x m row `count` times.
inline Var broadcast_rows(Tape& t, Var row, Eigen::Index count)
{
    const Tensor2& rv = t.value(row);
    if (rv.rows() != 1) throw ConfigurationError("broadcast_rows: expected a single row, got " + shape_string(rv));
    Tensor2 out = rv.replicate(count, 1);
    return t.push(std::move(out), {row}, [row](Tape& tp, const Tensor2& g, Var) {
        tp.accumulate(row, g.colwise().sum());
    });
}

inline Var sum_all(Tape& t, Var a)
{
    Tensor2 out(1, 1);
    out(0, 0) = t.value(a).sum();
    const Eigen::Index rows = t.value(a).rows();
    const Eigen::Index cols = t.value(a).cols();
    return t.push(std::move(out), {a}, [a, rows, cols](Tape& tp, const Tensor2& g, Var) {
        tp.accumulate(a, Tensor2::Constant(rows, cols, g(0, 0)));
    });
}

inline Var mean_all(Tape& t, Var a)
{
    const auto n = static_cast<double>(t.value(a).size());
    if (n == 0.0) throw PreconditionError("mean_all: empty input");
    return scale(t, sum_all(t, a), 1.0 / n);
}

// ---------------------------------------------------------------------------
// Nonlinearities

enum class ActivationKind { linear, leaky_relu, sigmoid, softplus, bounded_sigmoid, bounded_softplus };

/// Pointwise activation. The bounded variants are 0.1 + 0.9 * sigmoid(x)
/// and 0.1 + 0.9 * softplus(x); their outputs are kept strictly inside
/// (0.1, 1.0) and (0.1, inf) even where the double arithmetic saturates.
struct Activation {
    ActivationKind kind = ActivationKind::linear;
    double slope = 0.1;

    static Activation linear() { return {ActivationKind::linear, 0.0}; }
    static Activation leaky_relu(double slope = 0.1) { return {ActivationKind::leaky_relu, slope}; }
    static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
    static Activation softplus() { return {ActivationKind::softplus, 0.0}; }
    static Activation bounded_sigmoid() { return {ActivationKind::bounded_sigmoid, 0.0}; }
    static Activation bounded_softplus() { return {ActivationKind::bounded_softplus, 0.0}; }
};

inline constexpr double kBoundedFloor = 0.1;
inline constexpr double kBoundedScale = 0.9;

inline double activate(const Activation& act, double x)
{
    switch (act.kind) {
    case ActivationKind::linear:
        return x;
    case ActivationKind::leaky_relu:
        return x > 0.0 ? x : act.slope * x;
    case ActivationKind::sigmoid:
        return detail::stable_sigmoid(x);
    case ActivationKind::softplus:
        return detail::stable_softplus(x);
    case ActivationKind::bounded_sigmoid: {
        const double y = kBoundedFloor + kBoundedScale * detail::stable_sigmoid(x);
        return std::clamp(y, std::nextafter(kBoundedFloor, 1.0), std::nextafter(1.0, 0.0));
    }
    case ActivationKind::bounded_softplus: {
        const double y = kBoundedFloor + kBoundedScale * detail::stable_softplus(x);
        return std::max(y, std::nextafter(kBoundedFloor, 1.0));
    }
    }
    return x;
}

inline double activation_derivative(const Activation& act, double x)
{
    switch (act.kind) {
    case ActivationKind::linear:
        return 1.0;
    case ActivationKind::leaky_relu:
        return x > 0.0 ? 1.0 : act.slope;
    case ActivationKind::sigmoid: {
        const double s = detail::stable_sigmoid(x);
        return s * (1.0 - s);
    }
    case ActivationKind::softplus:
        return detail::stable_sigmoid(x);
    case ActivationKind::bounded_sigmoid: {
        const double s = detail::stable_sigmoid(x);
        return kBoundedScale * s * (1.0 - s);
    }
    case ActivationKind::bounded_softplus:
        return kBoundedScale * detail::stable_sigmoid(x);
    }
    return 1.0;
}

inline Var activation(Tape& t, Var a, Activation act)
{
    if (act.kind == ActivationKind::linear) return a;
    const Tensor2& av = t.value(a);
    Tensor2 out = av.unaryExpr([act](double x) { return activate(act, x); });
    return t.push(std::move(out), {a}, [a, act](Tape& tp, const Tensor2& g, Var) {
        const Tensor2& x = tp.value(a);
        tp.accumulate(a, g.cwiseProduct(x.unaryExpr([act](double v) { return activation_derivative(act, v); })));
    });
}

namespace detail {

/// In-place row-wise softmax with max subtraction.
inline void softmax_rows_inplace(Tensor2& s)
{
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double m = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - m).exp().matrix();
        s.row(i) /= s.row(i).sum();
    }
}

} // namespace detail

/**
 * Single-head scaled dot-product attention softmax(scale * q k^T) v for
 * q (n x d), k (m x d), v (m x e). Without recording, queries are processed
 * in row blocks so the n x m weight matrix is never materialized in full.
 * `weights_out`, when given, receives the full attention weights.
 */
inline Var scaled_dot_attention(Tape& t, Var q, Var k, Var v, double scale, Tensor2* weights_out = nullptr)
{
    const Tensor2& qv = t.value(q);
    const Tensor2& kv = t.value(k);
    const Tensor2& vv = t.value(v);
    if (kv.rows() < 1) throw PreconditionError("attention needs at least one key");
    if (qv.cols() != kv.cols() || kv.rows() != vv.rows())
        throw ConfigurationError("attention: incompatible shapes q " + shape_string(qv) + ", k " + shape_string(kv) +
                                 ", v " + shape_string(vv));
    const Eigen::Index n = qv.rows();
    const Eigen::Index m = kv.rows();
    t.count_multiply_adds(static_cast<std::uint64_t>(n * m * (qv.cols() + vv.cols())));
    const Tensor2 kt = kv.transpose() * scale;

    const bool keep = t.recording() && (t.requires_grad(q) || t.requires_grad(k) || t.requires_grad(v));
    if (!keep) {
        constexpr Eigen::Index block = 256;
        Tensor2 out(n, vv.cols());
        if (weights_out != nullptr) weights_out->resize(n, m);
        Tensor2 w;
        for (Eigen::Index r0 = 0; r0 < n; r0 += block) {
            const Eigen::Index rows = std::min(block, n - r0);
            w.resize(rows, m);
            w.noalias() = qv.middleRows(r0, rows) * kt;
            detail::softmax_rows_inplace(w);
            out.middleRows(r0, rows).noalias() = w * vv;
            if (weights_out != nullptr) weights_out->middleRows(r0, rows) = w;
        }
        return t.push(std::move(out), {q, k, v}, {});
    }

    Tensor2 w(n, m);
    w.noalias() = qv * kt;
    detail::softmax_rows_inplace(w);
    Tensor2 out(n, vv.cols());
    out.noalias() = w * vv;
    if (weights_out != nullptr) *weights_out = w;
    return t.push(std::move(out), {q, k, v}, [q, k, v, scale, w = std::move(w)](Tape& tp, const Tensor2& g, Var) {
        const Tensor2& vv = tp.value(v);
        if (tp.requires_grad(v)) tp.accumulate(v, w.transpose() * g);
        if (!tp.requires_grad(q) && !tp.requires_grad(k)) return;
        Tensor2 dw = g * vv.transpose();
        const Eigen::VectorXd dot = dw.cwiseProduct(w).rowwise().sum();
        Tensor2 ds = w.cwiseProduct(dw.colwise() - dot) * scale;
        if (tp.requires_grad(q)) tp.accumulate(q, ds * tp.value(k));
        if (tp.requires_grad(k)) tp.accumulate(k, ds.transpose() * tp.value(q));
    });
}

// ---------------------------------------------------------------------------
// Gaussian helpers

/// mean + std * noise with gradients to mean and std. std entries must be
/// strictly positive.
inline Var reparameterize(Tape& t, Var mean, Var std_dev, const Tensor2& noise)
{
    const Tensor2& mv = t.value(mean);
    const Tensor2& sv = t.value(std_dev);
    detail::require_same_shape(mv, sv, "reparameterize");
    detail::require_same_shape(mv, noise, "reparameterize");
    if (!(sv.array() > 0.0).all())
        throw ModelInvariantError("reparameterize: standard deviation must be strictly positive");
    Tensor2 out = mv + sv.cwiseProduct(noise);
    return t.push(std::move(out), {mean, std_dev}, [mean, std_dev, noise](Tape& tp, const Tensor2& g, Var) {
        tp.accumulate(mean, g);
        if (tp.requires_grad(std_dev)) tp.accumulate(std_dev, g.cwiseProduct(noise));
    });
}

/// Per-row log N(y | mean, std^2) for column vectors mean, std (n x 1) and
/// observed y (n x 1, constant).
inline Var gaussian_log_likelihood(Tape& t, Var mean, Var std_dev, const Tensor2& y)
{
    const Tensor2& mv = t.value(mean);
    const Tensor2& sv = t.value(std_dev);
    detail::require_same_shape(mv, sv, "gaussian_log_likelihood");
    detail::require_same_shape(mv, y, "gaussian_log_likelihood");
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    Tensor2 out(mv.rows(), mv.cols());
    for (Eigen::Index i = 0; i < mv.size(); ++i) {
        const double z = (y(i) - mv(i)) / sv(i);
        out(i) = -half_log_2pi - std::log(sv(i)) - 0.5 * z * z;
    }
    return t.push(std::move(out), {mean, std_dev}, [mean, std_dev, y](Tape& tp, const Tensor2& g, Var) {
        const Tensor2& m = tp.value(mean);
        const Tensor2& s = tp.value(std_dev);
        Tensor2 gm(m.rows(), m.cols());
        Tensor2 gs(m.rows(), m.cols());
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double r = y(i) - m(i);
            const double inv = 1.0 / s(i);
            gm(i) = g(i) * r * inv * inv;
            gs(i) = g(i) * (-inv + r * r * inv * inv * inv);
        }
        tp.accumulate(mean, gm);
        tp.accumulate(std_dev, gs);
    });
}

/// KL[N(m1, s1^2) || N(m2, s2^2)] summed over all entries, as a 1 x 1 node.
inline Var kl_diag_gaussian(Tape& t, Var m1, Var s1, Var m2, Var s2)
{
    const Tensor2& a = t.value(m1);
    const Tensor2& sa = t.value(s1);
    const Tensor2& b = t.value(m2);
    const Tensor2& sb = t.value(s2);
    detail::require_same_shape(a, sa, "kl_diag_gaussian");
    detail::require_same_shape(a, b, "kl_diag_gaussian");
    detail::require_same_shape(a, sb, "kl_diag_gaussian");
    double kl = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double d = a(i) - b(i);
        kl += std::log(sb(i) / sa(i)) + (sa(i) * sa(i) + d * d) / (2.0 * sb(i) * sb(i)) - 0.5;
    }
    Tensor2 out(1, 1);
    out(0, 0) = kl;
    return t.push(std::move(out), {m1, s1, m2, s2}, [m1, s1, m2, s2](Tape& tp, const Tensor2& g, Var) {
        const Tensor2& a = tp.value(m1);
        const Tensor2& sa = tp.value(s1);
        const Tensor2& b = tp.value(m2);
        const Tensor2& sb = tp.value(s2);
        const double go = g(0, 0);
        const Eigen::Index r = a.rows();
        const Eigen::Index c = a.cols();
        Tensor2 ga(r, c), gsa(r, c), gb(r, c), gsb(r, c);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            const double d = a(i) - b(i);
            const double vb = sb(i) * sb(i);
            ga(i) = go * d / vb;
            gb(i) = -ga(i);
            gsa(i) = go * (-1.0 / sa(i) + sa(i) / vb);
            gsb(i) = go * (1.0 / sb(i) - (sa(i) * sa(i) + d * d) / (vb * sb(i)));
        }
        tp.accumulate(m1, ga);
        tp.accumulate(s1, gsa);
        tp.accumulate(m2, gb);
        tp.accumulate(s2, gsb);
    });
}

} // namespace anpbbo::tensor
