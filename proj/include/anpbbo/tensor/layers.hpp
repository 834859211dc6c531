#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "anpbbo/tensor/ops.hpp"

namespace anpbbo::tensor {

/// Named weight tensors addressed by slot index. Layers store slots, so a
/// model can be copied by value and tapes reference the weights in place.
class ParameterStore {
public:
    std::size_t add(std::string name, Tensor2 init)
    {
        names_.push_back(std::move(name));
        values_.push_back(std::move(init));
        return values_.size() - 1;
    }

    std::size_t size() const noexcept { return values_.size(); }

    Tensor2& value(std::size_t slot) { return values_.at(slot); }
    const Tensor2& value(std::size_t slot) const { return values_.at(slot); }
    const std::string& name(std::size_t slot) const { return names_.at(slot); }

    std::vector<Tensor2>& values() noexcept { return values_; }
    const std::vector<Tensor2>& values() const noexcept { return values_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    std::vector<Tensor2> zeros_like() const
    {
        std::vector<Tensor2> out;
        out.reserve(values_.size());
        for (const auto& v : values_) out.push_back(Tensor2::Zero(v.rows(), v.cols()));
        return out;
    }

    std::size_t scalar_count() const
    {
        std::size_t n = 0;
        for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
        return n;
    }

    bool all_finite() const
    {
        for (const auto& v : values_)
            if (!v.allFinite()) return false;
        return true;
    }

private:
    std::vector<std::string> names_;
    std::vector<Tensor2> values_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
template <typename Rng>
Tensor2 glorot_uniform(Eigen::Index fan_out, Eigen::Index fan_in, Rng& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor2 w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = u(rng);
    return w;
}

/// Fully connected layer y = activation(x W^T + b) with W stored out x in.
struct DenseLayer {
    std::size_t weight = 0;
    std::size_t bias = 0;
    Eigen::Index in = 0;
    Eigen::Index out = 0;
    Activation act;

    template <typename Rng>
    static DenseLayer create(ParameterStore& store, const std::string& name, Eigen::Index in,
                             Eigen::Index out, Activation act, Rng& rng)
    {
        if (in <= 0 || out <= 0) throw ConfigurationError("dense layer '" + name + "' needs positive widths");
        DenseLayer layer;
        layer.in = in;
        layer.out = out;
        layer.act = act;
        layer.weight = store.add(name + ".weight", glorot_uniform(out, in, rng));
        layer.bias = store.add(name + ".bias", Tensor2::Zero(1, out));
        return layer;
    }

    /// Pre-activation x W^T + b.
    Var affine(Tape& t, const ParameterStore& store, Var x) const
    {
        if (t.value(x).cols() != in)
            throw ConfigurationError("dense layer expects " + std::to_string(in) + " inputs, got " +
                                     shape_string(t.value(x)));
        const Var w = t.parameter(store.value(weight), weight);
        const Var b = t.parameter(store.value(bias), bias);
        return add_row(t, matmul_bt(t, x, w), b);
    }

    Var forward(Tape& t, const ParameterStore& store, Var x) const
    {
        return activation(t, affine(t, store, x), act);
    }
};

/// Tape-free convenience evaluation of a single layer.
inline Tensor2 dense_forward(const DenseLayer& layer, const ParameterStore& store, const Tensor2& x)
{
    Tape t(false);
    return t.value(layer.forward(t, store, t.constant(x)));
}

/// Intermediate values of one attention call, for inspection in tests.
struct AttentionTrace {
    std::vector<Tensor2> weights;  ///< per head, queries x keys
    Tensor2 heads_concat;          ///< before the output projection
};

/**
 * Multi-head scaled dot-product attention. Queries, keys and values are
 * projected to `model_dim`, split into `heads` slices of width
 * model_dim / heads, attended per slice with scale 1/sqrt(head_dim), then
 * concatenated and passed through the output projection.
 */
struct MultiHeadAttention {
    Eigen::Index heads = 8;
    Eigen::Index model_dim = 128;
    DenseLayer query;
    DenseLayer key;
    DenseLayer value;
    DenseLayer output;

    template <typename Rng>
    static MultiHeadAttention create(ParameterStore& store, const std::string& name, Eigen::Index query_in,
                                     Eigen::Index key_in, Eigen::Index value_in, Eigen::Index model_dim,
                                     Eigen::Index heads, Rng& rng)
    {
        if (heads <= 0 || model_dim % heads != 0)
            throw ConfigurationError("attention '" + name + "': model_dim " + std::to_string(model_dim) +
                                     " not divisible by " + std::to_string(heads) + " heads");
        MultiHeadAttention a;
        a.heads = heads;
        a.model_dim = model_dim;
        a.query = DenseLayer::create(store, name + ".query", query_in, model_dim, Activation::linear(), rng);
        a.key = DenseLayer::create(store, name + ".key", key_in, model_dim, Activation::linear(), rng);
        a.value = DenseLayer::create(store, name + ".value", value_in, model_dim, Activation::linear(), rng);
        a.output = DenseLayer::create(store, name + ".output", model_dim, model_dim, Activation::linear(), rng);
        return a;
    }

    Eigen::Index head_dim() const { return model_dim / heads; }

    Var forward(Tape& t, const ParameterStore& store, Var queries, Var keys, Var values,
                AttentionTrace* trace = nullptr) const
    {
        if (t.value(keys).rows() < 1) throw PreconditionError("attention needs at least one key");
        if (t.value(keys).rows() != t.value(values).rows())
            throw PreconditionError("attention: keys and values must have the same row count");
        const Var q = query.forward(t, store, queries);
        const Var k = key.forward(t, store, keys);
        const Var v = value.forward(t, store, values);
        const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim()));
        std::vector<Var> per_head;
        per_head.reserve(static_cast<std::size_t>(heads));
        if (trace != nullptr) trace->weights.clear();
        for (Eigen::Index h = 0; h < heads; ++h) {
            const Var qh = col_slice(t, q, h * head_dim(), head_dim());
            const Var kh = col_slice(t, k, h * head_dim(), head_dim());
            const Var vh = col_slice(t, v, h * head_dim(), head_dim());
            Tensor2 weights;
            per_head.push_back(scaled_dot_attention(t, qh, kh, vh, inv_scale, trace != nullptr ? &weights : nullptr));
            if (trace != nullptr) trace->weights.push_back(std::move(weights));
        }
        const Var concat = heads == 1 ? per_head.front() : concat_cols(t, per_head);
        if (trace != nullptr) trace->heads_concat = t.value(concat);
        return output.forward(t, store, concat);
    }
};

inline Tensor2 attention_forward(const MultiHeadAttention& attn, const ParameterStore& store,
                                 const Tensor2& queries, const Tensor2& keys, const Tensor2& values,
                                 AttentionTrace* trace = nullptr)
{
    Tape t(false);
    const Var out = attn.forward(t, store, t.constant(queries), t.constant(keys), t.constant(values), trace);
    return t.value(out);
}

/// mean + std * noise. Throws ModelInvariantError unless every std entry is
/// strictly positive.
inline Vector reparameterized_sample(const Vector& mean, const Vector& std_dev, const Vector& noise)
{
    if (mean.size() != std_dev.size() || mean.size() != noise.size())
        throw ConfigurationError("reparameterized_sample: size mismatch");
    if (!(std_dev.array() > 0.0).all())
        throw ModelInvariantError("reparameterized_sample: standard deviation must be strictly positive");
    return mean + std_dev.cwiseProduct(noise);
}

} // namespace anpbbo::tensor
