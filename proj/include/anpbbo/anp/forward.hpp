#pragma once

#include <cstdint>
#include <vector>

#include "anpbbo/anp/model.hpp"

namespace anpbbo::anp {

using tensor::Tape;
using tensor::Var;

namespace path {

inline Var mlp(Tape& t, const tensor::ParameterStore& store, const std::vector<tensor::DenseLayer>& layers, Var x)
{
    for (const auto& layer : layers) x = layer.forward(t, store, x);
    return x;
}

struct LatentNodes {
    Var mean;
    Var std;
};

/// q(z | s) for the given set: per-point encodings, mean aggregation,
/// mean and std heads. Both outputs are 1 x latent.
inline LatentNodes latent(Tape& t, const AnpModel& m, const ContextSet& set)
{
    const Var pairs = t.constant(set.pairs());
    const Var encoded = mlp(t, m.params(), m.latent_encoder(), pairs);
    const Var pooled = tensor::mean_rows(t, encoded);
    return {m.latent_mean_head().forward(t, m.params(), pooled), m.latent_std_head().forward(t, m.params(), pooled)};
}

/// Per-target representation r (n_T x latent): context pairs through the
/// deterministic encoder are the values, positional encodings of context
/// and target locations are keys and queries of the cross-attention.
inline Var deterministic(Tape& t, const AnpModel& m, const ContextSet& ctx, Var target_theta,
                         tensor::AttentionTrace* trace = nullptr)
{
    const Var pairs = t.constant(ctx.pairs());
    const Var values = mlp(t, m.params(), m.deterministic_encoder(), pairs);
    const Var keys = m.positional_encoding().forward(t, m.params(), t.constant(ctx.theta));
    const Var queries = m.positional_encoding().forward(t, m.params(), target_theta);
    return m.cross_attention().forward(t, m.params(), queries, keys, values, trace);
}

struct DecoderNodes {
    Var mean;      ///< n_T x 1
    Var std;       ///< n_T x 1
    Var std_pre;   ///< pre-activation of the std head
};

inline DecoderNodes decoder(Tape& t, const AnpModel& m, Var z_row, Var target_theta, Var r)
{
    const Eigen::Index n = t.value(target_theta).rows();
    const Var z = tensor::broadcast_rows(t, z_row, n);
    const Var hidden = mlp(t, m.params(), m.decoder(), tensor::concat_cols(t, {z, target_theta, r}));
    const Var std_pre = m.decoder_std_head().affine(t, m.params(), hidden);
    return {m.decoder_mean_head().forward(t, m.params(), hidden),
            tensor::activation(t, std_pre, m.decoder_std_head().act), std_pre};
}

} // namespace path

inline Tensor2 as_row(const Vector& v)
{
    Tensor2 out(1, v.size());
    out.row(0) = v.transpose();
    return out;
}

/// One latent representation per target.
inline Tensor2 encode_deterministic(const AnpModel& model, const ContextSet& ctx, const TargetSet& targets)
{
    ctx.validate(model.dims().input_dim);
    targets.validate(model.dims().input_dim);
    Tape t(false);
    return t.value(path::deterministic(t, model, ctx, t.constant(targets.theta)));
}

inline LatentGaussian encode_latent(const AnpModel& model, const ContextSet& set)
{
    set.validate(model.dims().input_dim);
    Tape t(false);
    const auto q = path::latent(t, model, set);
    return {t.value(q.mean).row(0).transpose(), t.value(q.std).row(0).transpose()};
}

/// Gaussian predictions for `targets` given a latent draw and the
/// per-target representation from encode_deterministic().
inline AnpPrediction decode(const AnpModel& model, const Vector& z, const TargetSet& targets, const Tensor2& r)
{
    const auto& d = model.dims();
    if (z.size() != d.latent)
        throw ConfigurationError("decode: latent draw has " + std::to_string(z.size()) + " entries, expected " +
                                 std::to_string(d.latent));
    targets.validate(d.input_dim);
    if (r.rows() != targets.size() || r.cols() != d.latent)
        throw ConfigurationError("decode: representation shape " + tensor::shape_string(r) + " does not match " +
                                 std::to_string(targets.size()) + " targets");
    Tape t(false);
    const auto out = path::decoder(t, model, t.constant(as_row(z)), t.constant(targets.theta), t.constant(r));
    return {t.value(out.mean).col(0), t.value(out.std).col(0), z};
}

/// Closed-form KL[q1 || q2] for diagonal Gaussians, summed over dimensions.
inline double kl_diag_gaussians(const LatentGaussian& q1, const LatentGaussian& q2)
{
    if (q1.mean.size() != q2.mean.size() || q1.std.size() != q1.mean.size() || q2.std.size() != q2.mean.size())
        throw ConfigurationError("kl_diag_gaussians: dimension mismatch");
    double kl = 0.0;
    for (Eigen::Index i = 0; i < q1.mean.size(); ++i) {
        const double d = q1.mean(i) - q2.mean(i);
        const double v1 = q1.std(i) * q1.std(i);
        const double v2 = q2.std(i) * q2.std(i);
        kl += std::log(q2.std(i) / q1.std(i)) + (v1 + d * d) / (2.0 * v2) - 0.5;
    }
    return kl;
}

/// Draw z = mean + std * eps with eps ~ N(0, I).
template <typename Rng>
Vector sample_latent(const LatentGaussian& q, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector eps(q.mean.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = normal(rng);
    return tensor::reparameterized_sample(q.mean, q.std, eps);
}

/// encode_deterministic followed by decode. Read-only on the model; the
/// optional counter receives the number of multiply-adds performed.
inline AnpPrediction predict(const AnpModel& model, const ContextSet& ctx, const TargetSet& targets, const Vector& z,
                             std::uint64_t* multiply_adds = nullptr)
{
    const auto& d = model.dims();
    ctx.validate(d.input_dim);
    targets.validate(d.input_dim);
    if (z.size() != d.latent) throw ConfigurationError("predict: latent draw has wrong dimension");
    Tape t(false);
    const Var target_theta = t.constant(targets.theta);
    const Var r = path::deterministic(t, model, ctx, target_theta);
    const auto out = path::decoder(t, model, t.constant(as_row(z)), target_theta, r);
    if (multiply_adds != nullptr) *multiply_adds = t.multiply_adds();
    return {t.value(out.mean).col(0), t.value(out.std).col(0), z};
}

struct ElboResult {
    double loss = 0.0;
    double log_likelihood = 0.0;  ///< mean per-target log density
    double kl = 0.0;
    std::vector<Tensor2> grads;   ///< one per parameter slot, d loss / d weight
};

/**
 * Negative evidence lower bound for one (context, target) pair of sets:
 *
 *   loss = -mean_t log N(j_t | mu_t, sigma_t^2) + KL[q(z|s_T) || q(z|s_C)]
 *
 * with z = mu(z|s_T) + sigma(z|s_T) * noise. `noise` must have latent
 * entries; passing it explicitly makes the loss a deterministic function
 * of the weights.
 */
inline ElboResult elbo_loss(const AnpModel& model, const ContextSet& ctx, const ContextSet& tgt, const Vector& noise,
                            bool with_gradients = true)
{
    const auto& d = model.dims();
    ctx.validate(d.input_dim, "context set");
    tgt.validate(d.input_dim, "target set");
    if (noise.size() != d.latent) throw ConfigurationError("elbo_loss: noise has wrong dimension");

    Tape t(with_gradients);
    const auto q_context = path::latent(t, model, ctx);
    const auto q_target = path::latent(t, model, tgt);
    const Var z = tensor::reparameterize(t, q_target.mean, q_target.std, as_row(noise));
    const Var target_theta = t.constant(tgt.theta);
    const Var r = path::deterministic(t, model, ctx, target_theta);
    const auto out = path::decoder(t, model, z, target_theta, r);
    const Tensor2 observed = tgt.values;
    const Var mean_ll = tensor::mean_all(t, tensor::gaussian_log_likelihood(t, out.mean, out.std, observed));
    const Var kl = tensor::kl_diag_gaussian(t, q_target.mean, q_target.std, q_context.mean, q_context.std);
    const Var loss = tensor::sub(t, kl, mean_ll);

    ElboResult result;
    result.loss = t.value(loss)(0, 0);
    result.log_likelihood = t.value(mean_ll)(0, 0);
    result.kl = t.value(kl)(0, 0);
    if (!std::isfinite(result.loss)) throw TrainingError("non-finite ELBO loss");
    if (with_gradients) {
        t.backward(loss);
        result.grads = model.params().zeros_like();
        t.collect_parameter_grads(result.grads);
    }
    return result;
}

} // namespace anpbbo::anp
