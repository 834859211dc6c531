#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "anpbbo/errors.hpp"

namespace anpbbo::tensor {

/// Dense row-major matrix of doubles. Every activation, weight and gradient
/// in the library lives in one of these.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Handle to a node recorded on a Tape.
struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
};

inline bool all_finite(const Tensor2& t) { return t.allFinite(); }

inline std::string shape_string(const Tensor2& t)
{
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

/**
 * Reverse-mode computation tape scoped to one forward pass.
 *
 * Every operation pushes a node holding its value and, when any input needs
 * a gradient, a closure that scatters the output gradient back to the
 * inputs. Parameter leaves reference weights owned elsewhere (no copy) and
 * remember a slot index so their gradients can be collected after
 * backward(). A tape built with `record = false` keeps values only, which is
 * what inference uses: the tape is local to the call and the weights are
 * read through const pointers, so concurrent inference on one model is safe.
 */
class Tape {
public:
    using Backward = std::function<void(Tape&, const Tensor2& out_grad, Var self)>;

    explicit Tape(bool record = true) : record_(record) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const noexcept { return record_; }

    Var constant(Tensor2 value)
    {
        Node n;
        n.value = std::move(value);
        return push_node(std::move(n));
    }

    /// Leaf referencing an externally owned weight tensor. `slot` indexes
    /// the gradient vector filled by collect_parameter_grads().
    Var parameter(const Tensor2& weight, std::size_t slot)
    {
        Node n;
        n.external = &weight;
        n.slot = slot;
        n.requires_grad = record_;
        return push_node(std::move(n));
    }

    const Tensor2& value(Var v) const
    {
        const Node& n = nodes_.at(v.id);
        return n.external != nullptr ? *n.external : n.value;
    }

    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

    /// Push the result of an operation. `backward` is dropped unless at
    /// least one input needs a gradient.
    Var push(Tensor2 value, std::initializer_list<Var> inputs, Backward backward)
    {
        Node n;
        n.value = std::move(value);
        if (record_) {
            for (Var in : inputs) {
                if (nodes_.at(in.id).requires_grad) {
                    n.requires_grad = true;
                    break;
                }
            }
            if (n.requires_grad) n.backward = std::move(backward);
        }
        return push_node(std::move(n));
    }

    Var push(Tensor2 value, const std::vector<Var>& inputs, Backward backward)
    {
        Node n;
        n.value = std::move(value);
        if (record_) {
            for (Var in : inputs) {
                if (nodes_.at(in.id).requires_grad) {
                    n.requires_grad = true;
                    break;
                }
            }
            if (n.requires_grad) n.backward = std::move(backward);
        }
        return push_node(std::move(n));
    }

    /// Add `g` into the gradient buffer of `v` (no-op for constants).
    template <typename Expr>
    void accumulate(Var v, const Expr& g)
    {
        Node& n = nodes_.at(v.id);
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

    /// Seed d(output)/d(output) = 1 for a 1x1 output and sweep the tape
    /// backwards.
    void backward(Var output)
    {
        if (!record_) throw ConfigurationError("backward() on a tape built without recording");
        Node& out = nodes_.at(output.id);
        if (out.value.rows() != 1 || out.value.cols() != 1)
            throw ConfigurationError("backward() needs a 1x1 output, got " + shape_string(out.value));
        if (!out.requires_grad) return;
        out.grad = Tensor2::Ones(1, 1);
        for (std::size_t i = output.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.backward || n.grad.size() == 0) continue;
            n.backward(*this, n.grad, Var{i});
        }
    }

    const Tensor2& grad(Var v) const { return nodes_.at(v.id).grad; }

    /// Add every parameter-leaf gradient into `grads[slot]`. Slots whose
    /// entry is empty are resized to the weight shape first.
    void collect_parameter_grads(std::vector<Tensor2>& grads) const
    {
        for (const Node& n : nodes_) {
            if (n.external == nullptr || n.grad.size() == 0) continue;
            if (n.slot >= grads.size()) grads.resize(n.slot + 1);
            Tensor2& dst = grads[n.slot];
            if (dst.size() == 0) dst = Tensor2::Zero(n.external->rows(), n.external->cols());
            dst += n.grad;
        }
    }

    std::size_t size() const noexcept { return nodes_.size(); }

    /// Multiply-adds performed by matrix products on this tape.
    std::uint64_t multiply_adds() const noexcept { return multiply_adds_; }
    void count_multiply_adds(std::uint64_t n) noexcept { multiply_adds_ += n; }

private:
    struct Node {
        Tensor2 value;
        const Tensor2* external = nullptr;
        std::size_t slot = 0;
        bool requires_grad = false;
        Tensor2 grad;
        Backward backward;
    };

    Var push_node(Node&& n)
    {
        nodes_.push_back(std::move(n));
        return Var{nodes_.size() - 1};
    }

    bool record_;
    std::deque<Node> nodes_;
    std::uint64_t multiply_adds_ = 0;
};

} // namespace anpbbo::tensor
