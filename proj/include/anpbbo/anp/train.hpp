#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "anpbbo/anp/forward.hpp"
#include "anpbbo/tensor/adam.hpp"

namespace anpbbo::anp {

/// Learning rate is divided by `factor` once the step index exceeds
/// `after_step`.
struct Milestone {
    std::size_t after_step = 0;
    double factor = 1.0;

    friend bool operator==(const Milestone&, const Milestone&) = default;
};

struct TrainingSchedule {
    std::size_t total_steps = 5000;
    double initial_learning_rate = 1e-5;
    std::vector<Milestone> milestones;
    std::size_t minibatch = 32;
    /// Context and target set sizes are drawn uniformly from
    /// [min(set_size_min, N), min(set_size_max, N)].
    std::size_t set_size_min = 8;
    std::size_t set_size_max = 64;

    /// Offline fit on the initial design: 1e-5, halved after 1000 steps,
    /// divided by a further 5 after 2500, 5000 steps.
    static TrainingSchedule initial()
    {
        return {5000, 1e-5, {{1000, 2.0}, {2500, 5.0}}, 32, 8, 64};
    }

    /// Warm-started refit after every batch: 5e-5, halved after 250 steps,
    /// divided by a further 5 after 500, 750 steps.
    static TrainingSchedule per_round()
    {
        return {750, 5e-5, {{250, 2.0}, {500, 5.0}}, 32, 8, 64};
    }

    /// `step` is 1-based.
    double learning_rate(std::size_t step) const
    {
        double lr = initial_learning_rate;
        for (const auto& m : milestones)
            if (step > m.after_step) lr /= m.factor;
        return lr;
    }

    void validate() const
    {
        if (total_steps < 1) throw ConfigurationError("schedule: total_steps must be >= 1");
        if (!(initial_learning_rate > 0.0)) throw ConfigurationError("schedule: learning rate must be positive");
        if (minibatch < 1) throw ConfigurationError("schedule: minibatch must be >= 1");
        if (set_size_min < 1 || set_size_max < set_size_min)
            throw ConfigurationError("schedule: set sizes must satisfy 1 <= min <= max");
        for (std::size_t i = 0; i < milestones.size(); ++i) {
            if (!(milestones[i].factor > 1.0)) throw ConfigurationError("schedule: milestone factors must be > 1");
            if (i > 0 && milestones[i].after_step <= milestones[i - 1].after_step)
                throw ConfigurationError("schedule: milestones must be strictly increasing");
        }
    }

    friend bool operator==(const TrainingSchedule&, const TrainingSchedule&) = default;
};

struct TrainingReport {
    std::vector<double> losses;  ///< minibatch-mean loss per step
};

namespace detail {

template <typename Rng>
ContextSet random_subset(const ContextSet& data, std::size_t lo, std::size_t hi, std::vector<Eigen::Index>& scratch,
                         Rng& rng)
{
    const auto n = static_cast<std::size_t>(data.size());
    lo = std::min(lo, n);
    hi = std::min(hi, n);
    const std::size_t size = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    scratch.resize(n);
    std::iota(scratch.begin(), scratch.end(), Eigen::Index{0});
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(i, n - 1)(rng);
        std::swap(scratch[i], scratch[j]);
    }
    ContextSet out;
    out.theta.resize(static_cast<Eigen::Index>(size), data.theta.cols());
    out.values.resize(static_cast<Eigen::Index>(size));
    for (std::size_t i = 0; i < size; ++i) {
        out.theta.row(static_cast<Eigen::Index>(i)) = data.theta.row(scratch[i]);
        out.values(static_cast<Eigen::Index>(i)) = data.values(scratch[i]);
    }
    return out;
}

} // namespace detail

/**
 * Fit `model` to `data` (normalized theta, standardized values) with Adam.
 * Each step averages the ELBO over `schedule.minibatch` independently
 * drawn (context, target) set pairs; sets are sampled without replacement
 * and may overlap each other. With `warm` the weights are first copied
 * from that model. The result depends only on (seed, data, schedule, warm).
 */
inline TrainingReport train(AnpModel& model, const ContextSet& data, const TrainingSchedule& schedule,
                            const AnpModel* warm, std::uint64_t seed)
{
    schedule.validate();
    data.validate(model.dims().input_dim, "training data");
    if (data.size() < 2) throw PreconditionError("train: need at least 2 data points");
    if (warm != nullptr) model.copy_weights_from(*warm);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto adam = tensor::AdamState::for_parameters(model.params());
    std::vector<Eigen::Index> scratch;
    const Eigen::Index latent = model.dims().latent;
    const double inv_batch = 1.0 / static_cast<double>(schedule.minibatch);

    TrainingReport report;
    report.losses.reserve(schedule.total_steps);
    for (std::size_t step = 1; step <= schedule.total_steps; ++step) {
        std::vector<Tensor2> grads = model.params().zeros_like();
        double loss = 0.0;
        try {
            for (std::size_t b = 0; b < schedule.minibatch; ++b) {
                const ContextSet ctx = detail::random_subset(data, schedule.set_size_min, schedule.set_size_max,
                                                             scratch, rng);
                const ContextSet tgt = detail::random_subset(data, schedule.set_size_min, schedule.set_size_max,
                                                             scratch, rng);
                Vector noise(latent);
                for (Eigen::Index i = 0; i < latent; ++i) noise(i) = normal(rng);
                const ElboResult r = elbo_loss(model, ctx, tgt, noise);
                loss += r.loss * inv_batch;
                for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += r.grads[i] * inv_batch;
            }
            tensor::adam_step(adam, model.params(), grads, schedule.learning_rate(step));
        } catch (const TrainingError& e) {
            throw TrainingError(std::string(e.what()) + " at step " + std::to_string(step), e.tensor(), step);
        }
        report.losses.push_back(loss);
    }
    return report;
}

} // namespace anpbbo::anp
