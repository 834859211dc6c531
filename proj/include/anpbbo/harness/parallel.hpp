#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

#include "anpbbo/bbo/engine.hpp"

namespace anpbbo::harness {

/**
 * Evaluate every theta with up to `workers` concurrent threads. Result i
 * always belongs to thetas[i]; a failing evaluation only affects its own
 * slot.
 */
inline std::vector<bbo::EvaluationOutcome> parallel_evaluate(const bbo::Objective& objective,
                                                             const std::vector<bbo::Vector>& thetas,
                                                             const std::vector<std::uint64_t>& subseeds,
                                                             std::size_t workers)
{
    if (workers < 1) throw ConfigurationError("parallel_evaluate: workers must be >= 1");
    if (subseeds.size() != thetas.size()) throw PreconditionError("parallel_evaluate: one sub-seed per theta");
    std::vector<bbo::EvaluationOutcome> out(thetas.size());
    const std::size_t threads = std::min(workers, thetas.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < thetas.size(); ++i) out[i] = bbo::evaluate_one(objective, thetas[i], subseeds[i]);
        return out;
    }

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < thetas.size(); i = next++)
            out[i] = bbo::evaluate_one(objective, thetas[i], subseeds[i]);
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    return out;
}

/// Evaluate the candidates of one batch plan.
inline std::vector<bbo::EvaluationOutcome> parallel_evaluate(const bbo::BatchPlan& plan,
                                                             const bbo::Objective& objective,
                                                             const std::vector<std::uint64_t>& subseeds,
                                                             std::size_t workers)
{
    std::vector<bbo::Vector> thetas;
    thetas.reserve(plan.candidates.size());
    for (const auto& c : plan.candidates) thetas.push_back(c.theta);
    return parallel_evaluate(objective, thetas, subseeds, workers);
}

inline bbo::BatchEvaluator make_parallel_evaluator(std::size_t workers)
{
    if (workers < 1) throw ConfigurationError("workers must be >= 1");
    return [workers](const bbo::Objective& objective, const std::vector<bbo::Vector>& thetas,
                     const std::vector<std::uint64_t>& subseeds) {
        return parallel_evaluate(objective, thetas, subseeds, workers);
    };
}

} // namespace anpbbo::harness
