#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trendcast/common.hpp"

namespace trendcast {

/// Dense row-major float64 tensor. `node` points into a Tape when the value
/// was produced by a recorded operation (-1 otherwise).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    int node = -1;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (numel(shape) != data.size())
            throw std::invalid_argument("tensor shape/data size mismatch");
    }

    static std::size_t numel(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        const std::size_t n = numel(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }
    static Tensor vector(std::vector<double> d) {
        const std::size_t n = d.size();
        return Tensor({n}, std::move(d));
    }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> d) {
        return Tensor({rows, cols}, std::move(d));
    }

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
    std::size_t cols() const { return shape.size() == 2 ? shape[1] : shape.empty() ? 0 : shape[0]; }
    bool is_scalar() const { return data.size() == 1; }
    double value() const { return data[0]; }

    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
        os << "]";
        return os.str();
    }
};

enum class ActKind { Tanh, Sigmoid, Relu };

enum class OpKind {
    Leaf,
    Add,
    Mul,
    Linear,      // W x + b
    Matvec,      // M v
    Vecmat,      // v^T M
    LinearRows,  // X W^T
    AddRowvec,   // X + 1 v^T
    StackRows,
    Concat,
    Slice,
    Row,
    Sum,
    Activation,
    Softmax,
    L1Loss,
};

/// Reverse-mode tape. Nodes are appended in topological order (inputs always
/// have smaller ids); backward() runs one reverse sweep and accumulates
/// gradients across fan-out.
class Tape {
public:
    struct Node {
        OpKind op;
        std::vector<int> inputs;
        std::vector<std::size_t> shape;
        std::vector<double> values;  // forward result
        // op-specific extras
        ActKind act = ActKind::Tanh;
        std::size_t a = 0, b = 0;          // slice begin, row index, matrix dims
        std::vector<double> saved;         // copies of untracked input values
        std::uint32_t vsrc0 = 0, vsrc1 = 0;  // offset+1 into saved, 0 = input node
        std::vector<std::size_t> extents;  // concat part lengths
    };

    void clear() {
        nodes_.clear();
        grads_.clear();
        kink_margin_ = std::numeric_limits<double>::infinity();
    }

    std::size_t size() const { return nodes_.size(); }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

    /// Smallest |input| seen by a kink (relu, |.| in l1) during forward
    /// recording; used by the finite-difference checker to skip coordinates
    /// too close to a nondifferentiable point.
    double kink_margin() const { return kink_margin_; }

    /// Registers an externally owned value (parameter or input) as a leaf.
    Tensor leaf(const Tensor& t) {
        Tensor out = t;
        out.node = push(OpKind::Leaf, {}, t.shape, t.data);
        return out;
    }

    /// Gradient buffer of a node after backward(); shape matches the node.
    std::span<const double> grad(int id) const {
        return {grads_[static_cast<std::size_t>(id)].data(),
                grads_[static_cast<std::size_t>(id)].size()};
    }

    /// Reverse sweep from a scalar-shaped root. Gradient buffers are reset
    /// first, so repeated calls give identical results.
    void backward(int root) {
        if (root < 0 || static_cast<std::size_t>(root) >= nodes_.size())
            throw std::invalid_argument("backward: root is not on this tape");
        if (nodes_[static_cast<std::size_t>(root)].values.size() != 1)
            throw std::invalid_argument("backward: root must be scalar-shaped");
        grads_.assign(nodes_.size(), {});
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            grads_[i].assign(nodes_[i].values.size(), 0.0);
        grads_[static_cast<std::size_t>(root)].assign(1, 1.0);
        for (int id = root; id >= 0; --id) propagate(id);
    }

    int push(OpKind op, std::vector<int> inputs, std::vector<std::size_t> shape,
             std::vector<double> values) {
        Node n;
        n.op = op;
        n.inputs = std::move(inputs);
        n.shape = std::move(shape);
        n.values = std::move(values);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    Node& back() { return nodes_.back(); }

    /// Copies the values of an untracked operand into the newest node and
    /// returns its lookup token; tracked operands are read back from their
    /// own node, so 0 is returned.
    std::uint32_t operand(const Tensor& t) {
        if (t.node >= 0) return 0;
        Node& n = nodes_.back();
        const auto off = static_cast<std::uint32_t>(n.saved.size());
        n.saved.insert(n.saved.end(), t.data.begin(), t.data.end());
        return off + 1;
    }

    void note_kink(double margin) { kink_margin_ = std::min(kink_margin_, margin); }

private:
    const double* operand_values(const Node& n, std::size_t slot, std::uint32_t vsrc) const {
        if (vsrc) return n.saved.data() + (vsrc - 1);
        return nodes_[static_cast<std::size_t>(n.inputs[slot])].values.data();
    }

    void propagate(int id);

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    double kink_margin_ = std::numeric_limits<double>::infinity();
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

inline bool same_shape(const Tensor& x, const Tensor& y) { return x.shape == y.shape; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Recorded operations. Each computes the forward value and, when `tape` is
// non-null and all relevant inputs are tracked, appends a node. Passing a
// null tape gives a plain forward evaluation.
// ---------------------------------------------------------------------------

inline Tensor add(Tape* tape, const Tensor& x, const Tensor& y) {
    detail::require(detail::same_shape(x, y),
                    "add: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    Tensor out;
    out.shape = x.shape;
    out.data.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x.data[i] + y.data[i];
    if (tape) out.node = tape->push(OpKind::Add, {x.node, y.node}, out.shape, out.data);
    return out;
}

inline Tensor mul(Tape* tape, const Tensor& x, const Tensor& y) {
    detail::require(detail::same_shape(x, y),
                    "mul: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    Tensor out;
    out.shape = x.shape;
    out.data.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x.data[i] * y.data[i];
    if (tape) {
        out.node = tape->push(OpKind::Mul, {x.node, y.node}, out.shape, out.data);
        tape->back().vsrc0 = tape->operand(x);
        tape->back().vsrc1 = tape->operand(y);
    }
    return out;
}

/// out = W x + b, W is [m x n], x is [n], b is [m].
inline Tensor linear(Tape* tape, const Tensor& W, const Tensor& x, const Tensor& b) {
    detail::require(W.shape.size() == 2 && x.shape.size() == 1 && b.shape.size() == 1 &&
                        W.shape[1] == x.shape[0] && W.shape[0] == b.shape[0],
                    "linear: shape mismatch W " + W.shape_str() + ", x " + x.shape_str() +
                        ", b " + b.shape_str());
    const std::size_t m = W.shape[0], n = W.shape[1];
    Tensor out;
    out.shape = {m};
    out.data.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        const double* w = &W.data[i * n];
        for (std::size_t j = 0; j < n; ++j) acc += w[j] * x.data[j];
        out.data[i] = acc + b.data[i];
    }
    if (tape) {
        out.node = tape->push(OpKind::Linear, {W.node, x.node, b.node}, out.shape, out.data);
        tape->back().a = m;
        tape->back().b = n;
        tape->back().vsrc0 = tape->operand(W);
        tape->back().vsrc1 = tape->operand(x);
    }
    return out;
}

/// out = M v, no bias. M is [r x c], v is [c].
inline Tensor matvec(Tape* tape, const Tensor& M, const Tensor& v) {
    detail::require(M.shape.size() == 2 && v.shape.size() == 1 && M.shape[1] == v.shape[0],
                    "matvec: shape mismatch " + M.shape_str() + " vs " + v.shape_str());
    const std::size_t r = M.shape[0], c = M.shape[1];
    Tensor out;
    out.shape = {r};
    out.data.assign(r, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        const double* row = &M.data[i * c];
        for (std::size_t j = 0; j < c; ++j) acc += row[j] * v.data[j];
        out.data[i] = acc;
    }
    if (tape) {
        out.node = tape->push(OpKind::Matvec, {M.node, v.node}, out.shape, out.data);
        tape->back().a = r;
        tape->back().b = c;
        tape->back().vsrc0 = tape->operand(M);
        tape->back().vsrc1 = tape->operand(v);
    }
    return out;
}

/// out = v^T M (weights-times-rows). v is [r], M is [r x c].
inline Tensor vecmat(Tape* tape, const Tensor& v, const Tensor& M) {
    detail::require(M.shape.size() == 2 && v.shape.size() == 1 && M.shape[0] == v.shape[0],
                    "vecmat: shape mismatch " + v.shape_str() + " vs " + M.shape_str());
    const std::size_t r = M.shape[0], c = M.shape[1];
    Tensor out;
    out.shape = {c};
    out.data.assign(c, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        const double w = v.data[i];
        const double* row = &M.data[i * c];
        for (std::size_t j = 0; j < c; ++j) out.data[j] += w * row[j];
    }
    if (tape) {
        out.node = tape->push(OpKind::Vecmat, {v.node, M.node}, out.shape, out.data);
        tape->back().a = r;
        tape->back().b = c;
        tape->back().vsrc0 = tape->operand(v);
        tape->back().vsrc1 = tape->operand(M);
    }
    return out;
}

/// out = X W^T: applies W to every row of X. X is [r x n], W is [m x n].
inline Tensor linear_rows(Tape* tape, const Tensor& X, const Tensor& W) {
    detail::require(X.shape.size() == 2 && W.shape.size() == 2 && X.shape[1] == W.shape[1],
                    "linear_rows: shape mismatch " + X.shape_str() + " vs " + W.shape_str());
    const std::size_t r = X.shape[0], n = X.shape[1], m = W.shape[0];
    Tensor out;
    out.shape = {r, m};
    out.data.assign(r * m, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        const double* xrow = &X.data[i * n];
        for (std::size_t k = 0; k < m; ++k) {
            const double* wrow = &W.data[k * n];
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += xrow[j] * wrow[j];
            out.data[i * m + k] = acc;
        }
    }
    if (tape) {
        out.node = tape->push(OpKind::LinearRows, {X.node, W.node}, out.shape, out.data);
        tape->back().a = r;
        tape->back().b = n;
        tape->back().vsrc0 = tape->operand(X);
        tape->back().vsrc1 = tape->operand(W);
    }
    return out;
}

/// out[i, :] = X[i, :] + v
inline Tensor add_rowvec(Tape* tape, const Tensor& X, const Tensor& v) {
    detail::require(X.shape.size() == 2 && v.shape.size() == 1 && X.shape[1] == v.shape[0],
                    "add_rowvec: shape mismatch " + X.shape_str() + " vs " + v.shape_str());
    const std::size_t r = X.shape[0], c = X.shape[1];
    Tensor out;
    out.shape = X.shape;
    out.data.resize(X.size());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] = X.data[i * c + j] + v.data[j];
    if (tape) out.node = tape->push(OpKind::AddRowvec, {X.node, v.node}, out.shape, out.data);
    return out;
}

/// Stacks equal-length 1-D tensors into a [k x n] matrix.
inline Tensor stack_rows(Tape* tape, const std::vector<Tensor>& rows) {
    detail::require(!rows.empty(), "stack_rows: empty input");
    const std::size_t n = rows[0].shape.empty() ? 0 : rows[0].shape[0];
    Tensor out;
    out.shape = {rows.size(), n};
    out.data.reserve(rows.size() * n);
    std::vector<int> ids;
    ids.reserve(rows.size());
    for (const Tensor& rt : rows) {
        detail::require(rt.shape.size() == 1 && rt.shape[0] == n,
                        "stack_rows: row shape mismatch");
        out.data.insert(out.data.end(), rt.data.begin(), rt.data.end());
        ids.push_back(rt.node);
    }
    if (tape) out.node = tape->push(OpKind::StackRows, std::move(ids), out.shape, out.data);
    return out;
}

/// Concatenates 1-D tensors in order; zero-length parts contribute nothing.
inline Tensor concat(Tape* tape, const std::vector<Tensor>& parts) {
    detail::require(!parts.empty(), "concat: empty part list");
    Tensor out;
    std::vector<int> ids;
    std::vector<std::size_t> lens;
    ids.reserve(parts.size());
    lens.reserve(parts.size());
    for (const Tensor& p : parts) {
        detail::require(p.shape.size() == 1, "concat: parts must be 1-D");
        out.data.insert(out.data.end(), p.data.begin(), p.data.end());
        ids.push_back(p.node);
        lens.push_back(p.data.size());
    }
    out.shape = {out.data.size()};
    if (tape) {
        out.node = tape->push(OpKind::Concat, std::move(ids), out.shape, out.data);
        tape->back().extents = std::move(lens);
    }
    return out;
}

/// out = x[begin : begin+len] of a 1-D tensor.
inline Tensor slice(Tape* tape, const Tensor& x, std::size_t begin, std::size_t len) {
    detail::require(x.shape.size() == 1 && begin + len <= x.shape[0], "slice: out of range");
    Tensor out;
    out.shape = {len};
    out.data.assign(x.data.begin() + static_cast<std::ptrdiff_t>(begin),
                    x.data.begin() + static_cast<std::ptrdiff_t>(begin + len));
    if (tape) {
        out.node = tape->push(OpKind::Slice, {x.node}, out.shape, out.data);
        tape->back().a = begin;
        tape->back().b = x.shape[0];
    }
    return out;
}

/// Row i of a matrix as a 1-D tensor (embedding-table lookup).
inline Tensor row(Tape* tape, const Tensor& M, std::size_t i) {
    detail::require(M.shape.size() == 2 && i < M.shape[0], "row: index out of range");
    const std::size_t c = M.shape[1];
    Tensor out;
    out.shape = {c};
    out.data.assign(M.data.begin() + static_cast<std::ptrdiff_t>(i * c),
                    M.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
    if (tape) {
        out.node = tape->push(OpKind::Row, {M.node}, out.shape, out.data);
        tape->back().a = i;
        tape->back().b = c;
    }
    return out;
}

inline Tensor sum(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::scalar(std::accumulate(x.data.begin(), x.data.end(), 0.0));
    if (tape) {
        out.node = tape->push(OpKind::Sum, {x.node}, out.shape, out.data);
        tape->back().a = x.size();
    }
    return out;
}

inline Tensor activation(Tape* tape, ActKind kind, const Tensor& x) {
    Tensor out;
    out.shape = x.shape;
    out.data.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x.data[i];
        switch (kind) {
            case ActKind::Tanh: out.data[i] = std::tanh(v); break;
            case ActKind::Sigmoid: out.data[i] = 1.0 / (1.0 + std::exp(-v)); break;
            case ActKind::Relu: out.data[i] = v > 0.0 ? v : 0.0; break;
        }
    }
    if (tape) {
        if (kind == ActKind::Relu)
            for (double v : x.data) tape->note_kink(std::fabs(v));
        out.node = tape->push(OpKind::Activation, {x.node}, out.shape, out.data);
        tape->back().act = kind;
        if (kind == ActKind::Relu) tape->back().vsrc0 = tape->operand(x);
    }
    return out;
}

inline Tensor tanh_op(Tape* tape, const Tensor& x) { return activation(tape, ActKind::Tanh, x); }
inline Tensor sigmoid(Tape* tape, const Tensor& x) { return activation(tape, ActKind::Sigmoid, x); }
inline Tensor relu(Tape* tape, const Tensor& x) { return activation(tape, ActKind::Relu, x); }

/// Numerically stable softmax over a 1-D tensor (max subtraction).
inline Tensor softmax(Tape* tape, const Tensor& x) {
    detail::require(x.shape.size() == 1 && x.shape[0] >= 1, "softmax: need 1-D, k >= 1");
    Tensor out;
    out.shape = x.shape;
    out.data.resize(x.size());
    const double mx = *std::max_element(x.data.begin(), x.data.end());
    double denom = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.data[i] = std::exp(x.data[i] - mx);
        denom += out.data[i];
    }
    for (double& v : out.data) v /= denom;
    if (tape) out.node = tape->push(OpKind::Softmax, {x.node}, out.shape, out.data);
    return out;
}

/// Mean absolute error between a tracked prediction and a constant target.
/// Subgradient at zero difference is 0.
inline Tensor l1_loss(Tape* tape, const Tensor& pred, const Tensor& target) {
    detail::require(pred.size() == target.size(),
                    "l1_loss: length mismatch " + pred.shape_str() + " vs " + target.shape_str());
    detail::require(pred.size() > 0, "l1_loss: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::fabs(pred.data[i] - target.data[i]);
    Tensor out = Tensor::scalar(acc / static_cast<double>(pred.size()));
    if (tape) {
        for (std::size_t i = 0; i < pred.size(); ++i)
            tape->note_kink(std::fabs(pred.data[i] - target.data[i]));
        out.node = tape->push(OpKind::L1Loss, {pred.node}, out.shape, out.data);
        tape->back().a = pred.size();
        tape->back().vsrc0 = tape->operand(pred);
        Tensor detached = target;
        detached.node = -1;
        tape->back().vsrc1 = tape->operand(detached);
    }
    return out;
}

// ---------------------------------------------------------------------------

inline void Tape::propagate(int id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const std::vector<double>& g = grads_[static_cast<std::size_t>(id)];
    auto gin = [&](std::size_t slot) -> std::vector<double>* {
        const int in = n.inputs[slot];
        return in >= 0 ? &grads_[static_cast<std::size_t>(in)] : nullptr;
    };
    switch (n.op) {
        case OpKind::Leaf:
            break;
        case OpKind::Add: {
            for (std::size_t slot = 0; slot < 2; ++slot)
                if (auto* gi = gin(slot))
                    for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
            break;
        }
        case OpKind::Mul: {
            const std::size_t k = g.size();
            const double* xa = operand_values(n, 0, n.vsrc0);
            const double* xb = operand_values(n, 1, n.vsrc1);
            if (auto* ga = gin(0))
                for (std::size_t i = 0; i < k; ++i) (*ga)[i] += g[i] * xb[i];
            if (auto* gb = gin(1))
                for (std::size_t i = 0; i < k; ++i) (*gb)[i] += g[i] * xa[i];
            break;
        }
        case OpKind::Linear: {
            const std::size_t m = n.a, c = n.b;
            const double* W = operand_values(n, 0, n.vsrc0);
            const double* x = operand_values(n, 1, n.vsrc1);
            if (auto* gW = gin(0))
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < c; ++j) (*gW)[i * c + j] += g[i] * x[j];
            if (auto* gx = gin(1))
                for (std::size_t i = 0; i < m; ++i) {
                    const double gi = g[i];
                    const double* w = W + i * c;
                    for (std::size_t j = 0; j < c; ++j) (*gx)[j] += gi * w[j];
                }
            if (auto* gb = gin(2))
                for (std::size_t i = 0; i < m; ++i) (*gb)[i] += g[i];
            break;
        }
        case OpKind::Matvec: {
            const std::size_t r = n.a, c = n.b;
            const double* M = operand_values(n, 0, n.vsrc0);
            const double* v = operand_values(n, 1, n.vsrc1);
            if (auto* gM = gin(0))
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) (*gM)[i * c + j] += g[i] * v[j];
            if (auto* gv = gin(1))
                for (std::size_t i = 0; i < r; ++i) {
                    const double gi = g[i];
                    const double* row = M + i * c;
                    for (std::size_t j = 0; j < c; ++j) (*gv)[j] += gi * row[j];
                }
            break;
        }
        case OpKind::Vecmat: {
            const std::size_t r = n.a, c = n.b;
            const double* v = operand_values(n, 0, n.vsrc0);
            const double* M = operand_values(n, 1, n.vsrc1);
            if (auto* gv = gin(0))
                for (std::size_t i = 0; i < r; ++i) {
                    const double* row = M + i * c;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < c; ++j) acc += g[j] * row[j];
                    (*gv)[i] += acc;
                }
            if (auto* gM = gin(1))
                for (std::size_t i = 0; i < r; ++i) {
                    const double vi = v[i];
                    for (std::size_t j = 0; j < c; ++j) (*gM)[i * c + j] += vi * g[j];
                }
            break;
        }
        case OpKind::LinearRows: {
            // Y = X W^T: dX = dY W, dW = dY^T X
            const std::size_t r = n.a, c = n.b;
            const std::size_t m = n.shape[1];
            const double* X = operand_values(n, 0, n.vsrc0);
            const double* W = operand_values(n, 1, n.vsrc1);
            if (auto* gX = gin(0))
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t k = 0; k < m; ++k) {
                        const double gik = g[i * m + k];
                        const double* wrow = W + k * c;
                        for (std::size_t j = 0; j < c; ++j) (*gX)[i * c + j] += gik * wrow[j];
                    }
            if (auto* gW = gin(1))
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t k = 0; k < m; ++k) {
                        const double gik = g[i * m + k];
                        const double* xrow = X + i * c;
                        for (std::size_t j = 0; j < c; ++j) (*gW)[k * c + j] += gik * xrow[j];
                    }
            break;
        }
        case OpKind::AddRowvec: {
            const std::size_t r = n.shape[0], c = n.shape[1];
            if (auto* gX = gin(0))
                for (std::size_t i = 0; i < g.size(); ++i) (*gX)[i] += g[i];
            if (auto* gv = gin(1))
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) (*gv)[j] += g[i * c + j];
            break;
        }
        case OpKind::StackRows: {
            const std::size_t c = n.shape[1];
            for (std::size_t i = 0; i < n.inputs.size(); ++i)
                if (auto* gi = gin(i))
                    for (std::size_t j = 0; j < c; ++j) (*gi)[j] += g[i * c + j];
            break;
        }
        case OpKind::Concat: {
            std::size_t off = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                const int in = n.inputs[i];
                const std::size_t len = n.extents[i];
                if (in >= 0) {
                    auto& gi = grads_[static_cast<std::size_t>(in)];
                    for (std::size_t j = 0; j < len; ++j) gi[j] += g[off + j];
                }
                off += len;
            }
            break;
        }
        case OpKind::Slice: {
            if (auto* gx = gin(0))
                for (std::size_t j = 0; j < g.size(); ++j) (*gx)[n.a + j] += g[j];
            break;
        }
        case OpKind::Row: {
            if (auto* gM = gin(0))
                for (std::size_t j = 0; j < n.b; ++j) (*gM)[n.a * n.b + j] += g[j];
            break;
        }
        case OpKind::Sum: {
            if (auto* gx = gin(0))
                for (std::size_t j = 0; j < n.a; ++j) (*gx)[j] += g[0];
            break;
        }
        case OpKind::Activation: {
            auto* gx = gin(0);
            if (!gx) break;
            switch (n.act) {
                case ActKind::Tanh:
                    for (std::size_t i = 0; i < g.size(); ++i)
                        (*gx)[i] += g[i] * (1.0 - n.values[i] * n.values[i]);
                    break;
                case ActKind::Sigmoid:
                    for (std::size_t i = 0; i < g.size(); ++i)
                        (*gx)[i] += g[i] * n.values[i] * (1.0 - n.values[i]);
                    break;
                case ActKind::Relu: {
                    const double* x = operand_values(n, 0, n.vsrc0);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        if (x[i] > 0.0) (*gx)[i] += g[i];
                    break;
                }
            }
            break;
        }
        case OpKind::Softmax: {
            auto* gx = gin(0);
            if (!gx) break;
            double dot = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * n.values[i];
            for (std::size_t i = 0; i < g.size(); ++i)
                (*gx)[i] += n.values[i] * (g[i] - dot);
            break;
        }
        case OpKind::L1Loss: {
            auto* gp = gin(0);
            if (!gp) break;
            const std::size_t k = n.a;
            const double* pred = operand_values(n, 0, n.vsrc0);
            const double* target = operand_values(n, 1, n.vsrc1);
            const double inv = 1.0 / static_cast<double>(k);
            for (std::size_t i = 0; i < k; ++i) {
                const double d = pred[i] - target[i];
                const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                (*gp)[i] += g[0] * s * inv;
            }
            break;
        }
    }
}

}  // namespace trendcast
