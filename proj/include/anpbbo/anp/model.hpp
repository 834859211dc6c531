#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "anpbbo/tensor/layers.hpp"

namespace anpbbo::anp {

using tensor::Tensor2;
using tensor::Vector;

/// Layer widths of the attentive neural process. The defaults are the
/// reference architecture: 256 hidden units, 128-dimensional
/// representation and latent, 8 attention heads.
struct AnpDims {
    Eigen::Index input_dim = 1;
    Eigen::Index hidden = 256;
    Eigen::Index latent = 128;
    Eigen::Index heads = 8;
    double leaky_slope = 0.1;

    void validate() const
    {
        if (input_dim < 1) throw ConfigurationError("anp: input dimension must be >= 1");
        if (hidden < 1 || latent < 1) throw ConfigurationError("anp: hidden and latent widths must be >= 1");
        if (heads < 1 || latent % heads != 0)
            throw ConfigurationError("anp: latent width " + std::to_string(latent) + " not divisible by " +
                                     std::to_string(heads) + " heads");
    }

    friend bool operator==(const AnpDims&, const AnpDims&) = default;
};

/// Observed (theta, value) pairs: theta normalized to the unit box, values
/// standardized.
struct ContextSet {
    Tensor2 theta;  ///< n x input_dim
    Vector values;  ///< n

    Eigen::Index size() const { return theta.rows(); }

    void validate(Eigen::Index input_dim, const char* what = "context set") const
    {
        if (theta.rows() < 1) throw PreconditionError(std::string(what) + " must not be empty");
        if (theta.cols() != input_dim)
            throw ConfigurationError(std::string(what) + ": expected " + std::to_string(input_dim) +
                                     " columns, got " + std::to_string(theta.cols()));
        if (values.size() != theta.rows())
            throw ConfigurationError(std::string(what) + ": value count does not match point count");
        if (!((theta.array() >= 0.0) && (theta.array() <= 1.0)).all())
            throw PreconditionError(std::string(what) + ": theta outside the unit box");
        if (!values.allFinite()) throw PreconditionError(std::string(what) + ": non-finite value");
    }

    /// [theta | value] rows fed to both encoders.
    Tensor2 pairs() const
    {
        Tensor2 out(theta.rows(), theta.cols() + 1);
        out.leftCols(theta.cols()) = theta;
        out.col(theta.cols()) = values;
        return out;
    }
};

/// Query locations, normalized to the unit box.
struct TargetSet {
    Tensor2 theta;

    Eigen::Index size() const { return theta.rows(); }

    void validate(Eigen::Index input_dim) const
    {
        if (theta.rows() < 1) throw PreconditionError("target set must not be empty");
        if (theta.cols() != input_dim)
            throw ConfigurationError("target set: expected " + std::to_string(input_dim) + " columns, got " +
                                     std::to_string(theta.cols()));
        if (!((theta.array() >= 0.0) && (theta.array() <= 1.0)).all())
            throw PreconditionError("target set: theta outside the unit box");
    }
};

/// Diagonal Gaussian q(z | s). Every std entry lies in (0.1, 1.0).
struct LatentGaussian {
    Vector mean;
    Vector std;
};

/// Gaussian predictions at each target, with the latent draw that produced
/// them. Every std entry exceeds 0.1 (in standardized units).
struct AnpPrediction {
    Vector mean;
    Vector std;
    Vector latent;
};

/**
 * All learnable weights of the attentive neural process.
 *
 *  - deterministic encoder: [theta|j] -> hidden -> hidden -> latent
 *  - latent encoder: same shape, mean-aggregated, then a linear head for
 *    mu(z) and a bounded-sigmoid head for sigma(z)
 *  - positional encoding: theta -> latent, shared by queries and keys
 *  - cross-attention: multi-head, model width = latent
 *  - decoder: [z | theta | r] -> hidden x3 -> mu(J) (linear) and
 *    sigma(J) (bounded softplus)
 */
class AnpModel {
public:
    AnpModel() = default;

    AnpModel(const AnpDims& dims, std::uint64_t seed) : dims_(dims)
    {
        dims_.validate();
        std::mt19937_64 rng(seed);
        using tensor::Activation;
        using tensor::DenseLayer;
        const auto leaky = Activation::leaky_relu(dims_.leaky_slope);
        const Eigen::Index pair_dim = dims_.input_dim + 1;

        deterministic_ = {
            DenseLayer::create(params_, "deterministic.0", pair_dim, dims_.hidden, leaky, rng),
            DenseLayer::create(params_, "deterministic.1", dims_.hidden, dims_.hidden, leaky, rng),
            DenseLayer::create(params_, "deterministic.2", dims_.hidden, dims_.latent, Activation::linear(), rng),
        };
        latent_ = {
            DenseLayer::create(params_, "latent.0", pair_dim, dims_.hidden, leaky, rng),
            DenseLayer::create(params_, "latent.1", dims_.hidden, dims_.hidden, leaky, rng),
            DenseLayer::create(params_, "latent.2", dims_.hidden, dims_.latent, Activation::linear(), rng),
        };
        latent_mean_ =
            DenseLayer::create(params_, "latent.mean", dims_.latent, dims_.latent, Activation::linear(), rng);
        latent_std_ =
            DenseLayer::create(params_, "latent.std", dims_.latent, dims_.latent, Activation::bounded_sigmoid(), rng);
        positional_ =
            DenseLayer::create(params_, "positional", dims_.input_dim, dims_.latent, Activation::linear(), rng);
        attention_ = tensor::MultiHeadAttention::create(params_, "attention", dims_.latent, dims_.latent,
                                                        dims_.latent, dims_.latent, dims_.heads, rng);
        const Eigen::Index decoder_in = dims_.latent + dims_.input_dim + dims_.latent;
        decoder_ = {
            DenseLayer::create(params_, "decoder.0", decoder_in, dims_.hidden, leaky, rng),
            DenseLayer::create(params_, "decoder.1", dims_.hidden, dims_.hidden, leaky, rng),
            DenseLayer::create(params_, "decoder.2", dims_.hidden, dims_.hidden, leaky, rng),
        };
        decoder_mean_ = DenseLayer::create(params_, "decoder.mean", dims_.hidden, 1, Activation::linear(), rng);
        decoder_std_ =
            DenseLayer::create(params_, "decoder.std", dims_.hidden, 1, Activation::bounded_softplus(), rng);
    }

    const AnpDims& dims() const noexcept { return dims_; }
    tensor::ParameterStore& params() noexcept { return params_; }
    const tensor::ParameterStore& params() const noexcept { return params_; }

    const std::vector<tensor::DenseLayer>& deterministic_encoder() const noexcept { return deterministic_; }
    const std::vector<tensor::DenseLayer>& latent_encoder() const noexcept { return latent_; }
    const tensor::DenseLayer& latent_mean_head() const noexcept { return latent_mean_; }
    const tensor::DenseLayer& latent_std_head() const noexcept { return latent_std_; }
    const tensor::DenseLayer& positional_encoding() const noexcept { return positional_; }
    const tensor::MultiHeadAttention& cross_attention() const noexcept { return attention_; }
    const std::vector<tensor::DenseLayer>& decoder() const noexcept { return decoder_; }
    const tensor::DenseLayer& decoder_mean_head() const noexcept { return decoder_mean_; }
    const tensor::DenseLayer& decoder_std_head() const noexcept { return decoder_std_; }

    /// Overwrite every weight with `other`'s. Architectures must match.
    void copy_weights_from(const AnpModel& other)
    {
        if (!(other.dims_ == dims_) || other.params_.size() != params_.size())
            throw ConfigurationError("warm start: architecture mismatch");
        for (std::size_t i = 0; i < params_.size(); ++i) params_.value(i) = other.params_.value(i);
    }

private:
    AnpDims dims_;
    tensor::ParameterStore params_;
    std::vector<tensor::DenseLayer> deterministic_;
    std::vector<tensor::DenseLayer> latent_;
    tensor::DenseLayer latent_mean_;
    tensor::DenseLayer latent_std_;
    tensor::DenseLayer positional_;
    tensor::MultiHeadAttention attention_;
    std::vector<tensor::DenseLayer> decoder_;
    tensor::DenseLayer decoder_mean_;
    tensor::DenseLayer decoder_std_;
};

} // namespace anpbbo::anp
