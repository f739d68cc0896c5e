#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "sympoc/constraints.hpp"
#include "sympoc/dynamics.hpp"
#include "sympoc/vec.hpp"

namespace sympoc::ad {

// Primitive kinds. The first block is the core vector algebra; the block
// after Step holds fused domain kernels whose forward values are needed on
// the graph and whose exact local derivatives are cheaper to state in closed
// form than to compose (reciprocal-style terms do not exist as core ops).
enum class Op : std::uint8_t {
    Constant,
    Parameter,
    Add,
    Sub,
    Scale,
    Hadamard,
    MatVec,
    MatVecT,
    Relu,
    Sigmoid,
    Log,
    SquareNorm,
    Dot,
    Sum,
    MaxZero,
    MinZero,
    AffineComb,
    Step,
    Slice,
    Concat,
    BarrierValue,
    BarrierGrad,
    KineticGrad,
    ConstraintValues,
    ConstraintJtv,
};

struct NodeHandle {
    std::uint32_t index = UINT32_MAX;
    bool valid() const { return index != UINT32_MAX; }
    friend bool operator==(NodeHandle a, NodeHandle b) { return a.index == b.index; }
};

struct Payload {
    Vec coeffs;          // Scale factor [0] / AffineComb coefficients
    Vec shift;           // AffineComb constant term (optional)
    int rows = 0;        // MatVec / MatVecT
    int cols = 0;
    int offset = 0;      // Slice
    int length = 0;
    double barrier_a = 0.0;
    double speed_cap = 0.0;
    int block_dim = 0;
    std::shared_ptr<const ConstraintSet> constraints;
};

// A growing, append-only sequence of primitive records. Values are computed
// when a node is pushed; forward() re-evaluates every non-leaf record in
// order, so the same graph can be re-run after leaf updates. Single-threaded
// by design; independent tapes may run on independent threads.
class Tape {
  public:

    std::size_t size() const { return nodes_.size(); }

    NodeHandle constant(Vec v) { return push_leaf(Op::Constant, std::move(v)); }
    NodeHandle parameter(Vec v) { return push_leaf(Op::Parameter, std::move(v)); }

    NodeHandle zeros(std::size_t n) { return constant(Vec(n, 0.0)); }

    NodeHandle add(NodeHandle a, NodeHandle b) { return push(Op::Add, {a, b}); }
    NodeHandle sub(NodeHandle a, NodeHandle b) { return push(Op::Sub, {a, b}); }

    NodeHandle scale(NodeHandle x, double c) {
        Payload p;
        p.coeffs = {c};
        return push(Op::Scale, {x}, std::move(p));
    }

    NodeHandle hadamard(NodeHandle a, NodeHandle b) { return push(Op::Hadamard, {a, b}); }

    NodeHandle matvec(NodeHandle mat, NodeHandle x, int rows, int cols) {
        Payload p;
        p.rows = rows;
        p.cols = cols;
        return push(Op::MatVec, {mat, x}, std::move(p));
    }

    NodeHandle matvec_t(NodeHandle mat, NodeHandle y, int rows, int cols) {
        Payload p;
        p.rows = rows;
        p.cols = cols;
        return push(Op::MatVecT, {mat, y}, std::move(p));
    }

    NodeHandle relu(NodeHandle x) { return push(Op::Relu, {x}); }
    NodeHandle sigmoid(NodeHandle x) { return push(Op::Sigmoid, {x}); }
    NodeHandle log(NodeHandle x) { return push(Op::Log, {x}); }
    NodeHandle square_norm(NodeHandle x) { return push(Op::SquareNorm, {x}); }
    NodeHandle dot(NodeHandle a, NodeHandle b) { return push(Op::Dot, {a, b}); }
    NodeHandle sum(NodeHandle x) { return push(Op::Sum, {x}); }
    NodeHandle max_zero(NodeHandle x) { return push(Op::MaxZero, {x}); }
    NodeHandle min_zero(NodeHandle x) { return push(Op::MinZero, {x}); }
    NodeHandle step(NodeHandle x) { return push(Op::Step, {x}); }

    NodeHandle affine(std::vector<NodeHandle> inputs, Vec coeffs, Vec shift = {}) {
        Payload p;
        p.coeffs = std::move(coeffs);
        p.shift = std::move(shift);
        return push(Op::AffineComb, std::move(inputs), std::move(p));
    }

    NodeHandle slice(NodeHandle x, int offset, int length) {
        Payload p;
        p.offset = offset;
        p.length = length;
        return push(Op::Slice, {x}, std::move(p));
    }

    NodeHandle concat(std::vector<NodeHandle> inputs) { return push(Op::Concat, std::move(inputs)); }

    NodeHandle barrier_value(NodeHandle y, double a) {
        Payload p;
        p.barrier_a = a;
        return push(Op::BarrierValue, {y}, std::move(p));
    }

    NodeHandle barrier_grad(NodeHandle y, double a) {
        Payload p;
        p.barrier_a = a;
        return push(Op::BarrierGrad, {y}, std::move(p));
    }

    NodeHandle kinetic_grad(NodeHandle p_node, int block_dim, double speed_cap) {
        Payload p;
        p.block_dim = block_dim;
        p.speed_cap = speed_cap;
        return push(Op::KineticGrad, {p_node}, std::move(p));
    }

    NodeHandle constraint_values(NodeHandle x, std::shared_ptr<const ConstraintSet> cs) {
        Payload p;
        p.constraints = std::move(cs);
        return push(Op::ConstraintValues, {x}, std::move(p));
    }

    NodeHandle constraint_jtv(NodeHandle x, NodeHandle v, std::shared_ptr<const ConstraintSet> cs) {
        Payload p;
        p.constraints = std::move(cs);
        return push(Op::ConstraintJtv, {x, v}, std::move(p));
    }

    NodeHandle push(Op op, std::vector<NodeHandle> inputs, Payload payload = Payload()) {
        Node node;
        node.op = op;
        node.inputs.reserve(inputs.size());
        for (NodeHandle h : inputs) {
            require(h.valid() && h.index < nodes_.size(), "tape: input handle out of range");
            node.inputs.push_back(h.index);
        }
        node.payload = std::move(payload);
        nodes_.push_back(std::move(node));
        const std::size_t idx = nodes_.size() - 1;
        shape_and_eval(idx, /*record=*/true);
        return NodeHandle{static_cast<std::uint32_t>(idx)};
    }

    std::span<const double> value(NodeHandle h) const { return nodes_[h.index].value; }

    double scalar(NodeHandle h) const {
        require(nodes_[h.index].value.size() == 1, "tape: node is not scalar");
        return nodes_[h.index].value[0];
    }

    // Leaf update; graph structure is untouched. Call forward() afterwards.
    void set_value(NodeHandle h, std::span<const double> v) {
        Node& n = nodes_[h.index];
        require(n.op == Op::Constant || n.op == Op::Parameter, "tape: only leaves can be re-set");
        require(n.value.size() == v.size(), "tape: leaf value size mismatch");
        std::copy(v.begin(), v.end(), n.value.begin());
    }

    // Re-evaluate all non-leaf records in topological (= append) order.
    void forward() {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Op op = nodes_[i].op;
            if (op == Op::Constant || op == Op::Parameter) continue;
            shape_and_eval(i, /*record=*/false);
        }
    }

    // Reverse accumulation from a scalar output. Adjoints of every node are
    // (re)computed; read them via adjoint().
    void backward(NodeHandle output) {
        require(output.valid() && output.index < nodes_.size(), "tape: invalid output handle");
        require(nodes_[output.index].value.size() == 1, "tape: backward output must be scalar");
        for (Node& n : nodes_) n.adjoint.assign(n.value.size(), 0.0);
        nodes_[output.index].adjoint[0] = 1.0;
        for (std::size_t i = output.index + 1; i-- > 0;) backprop(i);
    }

    std::span<const double> adjoint(NodeHandle h) const { return nodes_[h.index].adjoint; }

    // Spec-shaped entry point: d(output)/d(seed) for every seed; unused seeds
    // get zero vectors.
    std::vector<Vec> gradients(NodeHandle output, std::span<const NodeHandle> seeds) {
        backward(output);
        std::vector<Vec> out;
        out.reserve(seeds.size());
        for (NodeHandle s : seeds) {
            const Node& n = nodes_[s.index];
            out.emplace_back(n.adjoint.begin(), n.adjoint.end());
        }
        return out;
    }

  private:
    struct Node {
        Op op = Op::Constant;
        std::vector<std::uint32_t> inputs;
        Payload payload;
        Vec value;
        Vec adjoint;
    };

    NodeHandle push_leaf(Op op, Vec v) {
        Node node;
        node.op = op;
        node.value = std::move(v);
        nodes_.push_back(std::move(node));
        return NodeHandle{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    const Vec& in(const Node& n, std::size_t k) const { return nodes_[n.inputs[k]].value; }

    void shape_and_eval(std::size_t idx, bool record) {
        Node& n = nodes_[idx];
        switch (n.op) {
            case Op::Constant:
            case Op::Parameter:
                break;
            case Op::Add:
            case Op::Sub:
            case Op::Hadamard: {
                const Vec& a = in(n, 0);
                const Vec& b = in(n, 1);
                if (record)
                    require(a.size() == b.size(), "tape: binary op operands differ in length");
                n.value.resize(a.size());
                if (n.op == Op::Add)
                    for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] + b[i];
                else if (n.op == Op::Sub)
                    for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] - b[i];
                else
                    for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] * b[i];
                break;
            }
            case Op::Scale: {
                const Vec& x = in(n, 0);
                if (record) require(n.payload.coeffs.size() == 1, "tape: scale needs one coefficient");
                const double c = n.payload.coeffs[0];
                n.value.resize(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = c * x[i];
                break;
            }
            case Op::MatVec: {
                const Vec& mat = in(n, 0);
                const Vec& x = in(n, 1);
                const int rows = n.payload.rows, cols = n.payload.cols;
                if (record) {
                    require(rows >= 1 && cols >= 1, "tape: matvec needs positive dims");
                    require(mat.size() == static_cast<std::size_t>(rows) * cols,
                            "tape: matrix length does not match dims");
                    require(x.size() == static_cast<std::size_t>(cols),
                            "tape: matvec vector length mismatch");
                }
                n.value.assign(static_cast<std::size_t>(rows), 0.0);
                for (int r = 0; r < rows; ++r) {
                    const double* row = mat.data() + static_cast<std::size_t>(r) * cols;
                    double acc = 0.0;
                    for (int c = 0; c < cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
                    n.value[static_cast<std::size_t>(r)] = acc;
                }
                break;
            }
            case Op::MatVecT: {
                const Vec& mat = in(n, 0);
                const Vec& y = in(n, 1);
                const int rows = n.payload.rows, cols = n.payload.cols;
                if (record) {
                    require(rows >= 1 && cols >= 1, "tape: matvec-transpose needs positive dims");
                    require(mat.size() == static_cast<std::size_t>(rows) * cols,
                            "tape: matrix length does not match dims");
                    require(y.size() == static_cast<std::size_t>(rows),
                            "tape: matvec-transpose vector length mismatch");
                }
                n.value.assign(static_cast<std::size_t>(cols), 0.0);
                for (int r = 0; r < rows; ++r) {
                    const double yr = y[static_cast<std::size_t>(r)];
                    const double* row = mat.data() + static_cast<std::size_t>(r) * cols;
                    for (int c = 0; c < cols; ++c) n.value[static_cast<std::size_t>(c)] += row[c] * yr;
                }
                break;
            }
            case Op::Relu:
            case Op::MaxZero: {
                const Vec& x = in(n, 0);
                n.value.resize(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] > 0.0 ? x[i] : 0.0;
                break;
            }
            case Op::MinZero: {
                const Vec& x = in(n, 0);
                n.value.resize(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] < 0.0 ? x[i] : 0.0;
                break;
            }
            case Op::Sigmoid: {
                const Vec& x = in(n, 0);
                n.value.resize(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = 1.0 / (1.0 + std::exp(-x[i]));
                break;
            }
            case Op::Log: {
                const Vec& x = in(n, 0);
                n.value.resize(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = std::log(x[i]);
                break;
            }
            case Op::Step: {
                const Vec& x = in(n, 0);
                n.value.resize(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] > 0.0 ? 1.0 : 0.0;
                break;
            }
            case Op::SquareNorm: {
                n.value.assign(1, norm2_sq(in(n, 0)));
                break;
            }
            case Op::Dot: {
                const Vec& a = in(n, 0);
                const Vec& b = in(n, 1);
                if (record) require(a.size() == b.size(), "tape: dot operands differ in length");
                n.value.assign(1, sympoc::dot(a, b));
                break;
            }
            case Op::Sum: {
                const Vec& x = in(n, 0);
                double acc = 0.0;
                for (double v : x) acc += v;
                n.value.assign(1, acc);
                break;
            }
            case Op::AffineComb: {
                if (record) {
                    require(!n.inputs.empty(), "tape: affine combination needs inputs");
                    require(n.payload.coeffs.size() == n.inputs.size(),
                            "tape: affine combination needs one coefficient per input");
                    for (std::size_t k = 1; k < n.inputs.size(); ++k)
                        require(in(n, k).size() == in(n, 0).size(),
                                "tape: affine combination operands differ in length");
                    require(n.payload.shift.empty() || n.payload.shift.size() == in(n, 0).size(),
                            "tape: affine combination shift length mismatch");
                }
                const std::size_t len = in(n, 0).size();
                if (n.payload.shift.empty())
                    n.value.assign(len, 0.0);
                else
                    n.value.assign(n.payload.shift.begin(), n.payload.shift.end());
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    const double c = n.payload.coeffs[k];
                    const Vec& x = in(n, k);
                    for (std::size_t i = 0; i < len; ++i) n.value[i] += c * x[i];
                }
                break;
            }
            case Op::Slice: {
                const Vec& x = in(n, 0);
                const int off = n.payload.offset, len = n.payload.length;
                if (record)
                    require(off >= 0 && len >= 0 &&
                                static_cast<std::size_t>(off + len) <= x.size(),
                            "tape: slice out of range");
                n.value.assign(x.begin() + off, x.begin() + off + len);
                break;
            }
            case Op::Concat: {
                std::size_t total = 0;
                for (std::size_t k = 0; k < n.inputs.size(); ++k) total += in(n, k).size();
                n.value.clear();
                n.value.reserve(total);
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    const Vec& x = in(n, k);
                    n.value.insert(n.value.end(), x.begin(), x.end());
                }
                break;
            }
            case Op::BarrierValue: {
                const Vec& y = in(n, 0);
                double acc = 0.0;
                for (double v : y) acc += barrier_scalar(n.payload.barrier_a, v);
                n.value.assign(1, acc);
                break;
            }
            case Op::BarrierGrad: {
                const Vec& y = in(n, 0);
                n.value.resize(y.size());
                for (std::size_t i = 0; i < y.size(); ++i)
                    n.value[i] = barrier_deriv(n.payload.barrier_a, y[i]);
                break;
            }
            case Op::KineticGrad: {
                const Vec& p = in(n, 0);
                if (record)
                    require(n.payload.block_dim >= 1 &&
                                p.size() % static_cast<std::size_t>(n.payload.block_dim) == 0,
                            "tape: kinetic gradient block size mismatch");
                n.value.resize(p.size());
                hamiltonian_capped(p, n.payload.block_dim, n.payload.speed_cap, n.value);
                break;
            }
            case Op::ConstraintValues: {
                const auto& cs = *n.payload.constraints;
                if (record)
                    require(static_cast<int>(in(n, 0).size()) == cs.input_dim(),
                            "tape: constraint input dimension mismatch");
                n.value.resize(static_cast<std::size_t>(cs.output_dim()));
                cs.values(in(n, 0), n.value);
                break;
            }
            case Op::ConstraintJtv: {
                const auto& cs = *n.payload.constraints;
                if (record) {
                    require(static_cast<int>(in(n, 0).size()) == cs.input_dim(),
                            "tape: constraint input dimension mismatch");
                    require(static_cast<int>(in(n, 1).size()) == cs.output_dim(),
                            "tape: constraint weight dimension mismatch");
                }
                n.value.assign(in(n, 0).size(), 0.0);
                cs.accumulate_jtv(in(n, 0), in(n, 1), n.value);
                break;
            }
        }
    }

    void backprop(std::size_t idx) {
        Node& n = nodes_[idx];
        const Vec& w = n.adjoint;
        bool live = false;
        for (double v : w)
            if (v != 0.0) {
                live = true;
                break;
            }
        if (!live) return;
        auto adj = [&](std::size_t k) -> Vec& { return nodes_[n.inputs[k]].adjoint; };
        switch (n.op) {
            case Op::Constant:
            case Op::Parameter:
            case Op::Step:
                break;
            case Op::Add: {
                for (std::size_t i = 0; i < w.size(); ++i) adj(0)[i] += w[i];
                for (std::size_t i = 0; i < w.size(); ++i) adj(1)[i] += w[i];
                break;
            }
            case Op::Sub: {
                for (std::size_t i = 0; i < w.size(); ++i) adj(0)[i] += w[i];
                for (std::size_t i = 0; i < w.size(); ++i) adj(1)[i] -= w[i];
                break;
            }
            case Op::Scale: {
                const double c = n.payload.coeffs[0];
                for (std::size_t i = 0; i < w.size(); ++i) adj(0)[i] += c * w[i];
                break;
            }
            case Op::Hadamard: {
                const Vec& a = in(n, 0);
                const Vec& b = in(n, 1);
                for (std::size_t i = 0; i < w.size(); ++i) adj(0)[i] += b[i] * w[i];
                for (std::size_t i = 0; i < w.size(); ++i) adj(1)[i] += a[i] * w[i];
                break;
            }
            case Op::MatVec: {
                const Vec& mat = in(n, 0);
                const Vec& x = in(n, 1);
                const int rows = n.payload.rows, cols = n.payload.cols;
                Vec& amat = adj(0);
                Vec& ax = adj(1);
                for (int r = 0; r < rows; ++r) {
                    const double wr = w[static_cast<std::size_t>(r)];
                    if (wr == 0.0) continue;
                    double* arow = amat.data() + static_cast<std::size_t>(r) * cols;
                    const double* row = mat.data() + static_cast<std::size_t>(r) * cols;
                    for (int c = 0; c < cols; ++c) {
                        arow[c] += wr * x[static_cast<std::size_t>(c)];
                        ax[static_cast<std::size_t>(c)] += row[c] * wr;
                    }
                }
                break;
            }
            case Op::MatVecT: {
                const Vec& mat = in(n, 0);
                const Vec& y = in(n, 1);
                const int rows = n.payload.rows, cols = n.payload.cols;
                Vec& amat = adj(0);
                Vec& ay = adj(1);
                for (int r = 0; r < rows; ++r) {
                    const double yr = y[static_cast<std::size_t>(r)];
                    double* arow = amat.data() + static_cast<std::size_t>(r) * cols;
                    const double* row = mat.data() + static_cast<std::size_t>(r) * cols;
                    double acc = 0.0;
                    for (int c = 0; c < cols; ++c) {
                        arow[c] += yr * w[static_cast<std::size_t>(c)];
                        acc += row[c] * w[static_cast<std::size_t>(c)];
                    }
                    ay[static_cast<std::size_t>(r)] += acc;
                }
                break;
            }
            case Op::Relu:
            case Op::MaxZero: {
                const Vec& x = in(n, 0);
                for (std::size_t i = 0; i < w.size(); ++i)
                    if (x[i] > 0.0) adj(0)[i] += w[i];
                break;
            }
            case Op::MinZero: {
                const Vec& x = in(n, 0);
                for (std::size_t i = 0; i < w.size(); ++i)
                    if (x[i] < 0.0) adj(0)[i] += w[i];
                break;
            }
            case Op::Sigmoid: {
                for (std::size_t i = 0; i < w.size(); ++i) {
                    const double s = n.value[i];
                    adj(0)[i] += w[i] * s * (1.0 - s);
                }
                break;
            }
            case Op::Log: {
                const Vec& x = in(n, 0);
                for (std::size_t i = 0; i < w.size(); ++i) adj(0)[i] += w[i] / x[i];
                break;
            }
            case Op::SquareNorm: {
                const Vec& x = in(n, 0);
                const double w0 = w[0];
                for (std::size_t i = 0; i < x.size(); ++i) adj(0)[i] += 2.0 * w0 * x[i];
                break;
            }
            case Op::Dot: {
                const Vec& a = in(n, 0);
                const Vec& b = in(n, 1);
                const double w0 = w[0];
                for (std::size_t i = 0; i < a.size(); ++i) adj(0)[i] += w0 * b[i];
                for (std::size_t i = 0; i < b.size(); ++i) adj(1)[i] += w0 * a[i];
                break;
            }
            case Op::Sum: {
                const double w0 = w[0];
                Vec& a = adj(0);
                for (std::size_t i = 0; i < a.size(); ++i) a[i] += w0;
                break;
            }
            case Op::AffineComb: {
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    const double c = n.payload.coeffs[k];
                    Vec& a = adj(k);
                    for (std::size_t i = 0; i < w.size(); ++i) a[i] += c * w[i];
                }
                break;
            }
            case Op::Slice: {
                Vec& a = adj(0);
                const int off = n.payload.offset;
                for (std::size_t i = 0; i < w.size(); ++i) a[static_cast<std::size_t>(off) + i] += w[i];
                break;
            }
            case Op::Concat: {
                std::size_t off = 0;
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    Vec& a = adj(k);
                    for (std::size_t i = 0; i < a.size(); ++i) a[i] += w[off + i];
                    off += a.size();
                }
                break;
            }
            case Op::BarrierValue: {
                const Vec& y = in(n, 0);
                const double w0 = w[0];
                for (std::size_t i = 0; i < y.size(); ++i)
                    adj(0)[i] += w0 * barrier_deriv(n.payload.barrier_a, y[i]);
                break;
            }
            case Op::BarrierGrad: {
                const Vec& y = in(n, 0);
                for (std::size_t i = 0; i < w.size(); ++i)
                    adj(0)[i] += w[i] * barrier_second(n.payload.barrier_a, y[i]);
                break;
            }
            case Op::KineticGrad: {
                // Hessian-vector product of the capped kinetic term
                const Vec& p = in(n, 0);
                const int bd = n.payload.block_dim;
                const double cap = n.payload.speed_cap;
                Vec& a = adj(0);
                for (std::size_t off = 0; off < p.size(); off += static_cast<std::size_t>(bd)) {
                    const auto pb = std::span<const double>(p).subspan(off, static_cast<std::size_t>(bd));
                    const auto wb = std::span<const double>(w).subspan(off, static_cast<std::size_t>(bd));
                    const double r2 = norm2_sq(pb);
                    if (r2 <= cap * cap) {
                        for (int c = 0; c < bd; ++c) a[off + static_cast<std::size_t>(c)] += wb[static_cast<std::size_t>(c)];
                    } else {
                        const double r = std::sqrt(r2);
                        const double pw = sympoc::dot(pb, wb);
                        for (int c = 0; c < bd; ++c)
                            a[off + static_cast<std::size_t>(c)] +=
                                cap * (wb[static_cast<std::size_t>(c)] / r -
                                       pb[static_cast<std::size_t>(c)] * pw / (r2 * r));
                    }
                }
                break;
            }
            case Op::ConstraintValues: {
                n.payload.constraints->accumulate_jtv(in(n, 0), w, adj(0));
                break;
            }
            case Op::ConstraintJtv: {
                const auto& cs = *n.payload.constraints;
                cs.accumulate_hvp(in(n, 0), in(n, 1), w, adj(0));
                cs.accumulate_jvp(in(n, 0), w, adj(1));
                break;
            }
        }
    }

    std::vector<Node> nodes_;
};

// Central differences, component by component: the test oracle for every
// gradient in the project.
inline Vec finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> point, double step) {
    require(step > 0.0, "finite differences: step must be positive");
    Vec x(point.begin(), point.end());
    Vec grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double fp = f(x);
        x[i] = saved - step;
        const double fm = f(x);
        x[i] = saved;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

}  // namespace sympoc::ad
