#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "anpbbo/anp/train.hpp"
#include "anpbbo/bbo/acquisition.hpp"
#include "anpbbo/bbo/dataset.hpp"
#include "anpbbo/bbo/objective.hpp"
#include "anpbbo/bbo/penalization.hpp"
#include "anpbbo/bbo/sobol.hpp"
#include "anpbbo/seeding.hpp"

namespace anpbbo::bbo {

/// Surrogate architecture and fitting schedules. `dims.input_dim` is
/// overwritten with the domain dimension at run time.
struct SurrogateConfig {
    anp::AnpDims dims;
    anp::TrainingSchedule initial = anp::TrainingSchedule::initial();
    anp::TrainingSchedule per_round = anp::TrainingSchedule::per_round();
};

struct BboConfig {
    std::size_t initial_points = 1000;  ///< N0
    std::size_t rounds = 200;           ///< N_iter
    std::size_t batch_size = 5;         ///< K
    std::size_t target_samples = 5000;  ///< targets scored per selection
    double delta = 0.01;                ///< exclusion radius, normalized units
    double beta = 3.0;                  ///< UCB coefficient
    bool no_target_penalization = false;
    bool no_retrain = false;
    bool scramble_initial_design = true;
    std::uint64_t seed = 0;
    SurrogateConfig surrogate;

    void validate() const
    {
        if (initial_points < 1 || rounds < 1 || batch_size < 1 || target_samples < 1)
            throw ConfigurationError("bbo: initial_points, rounds, batch_size and target_samples must be >= 1");
        if (!(delta > 0.0)) throw ConfigurationError("bbo: delta must be > 0");
        if (!(beta >= 0.0)) throw ConfigurationError("bbo: beta must be >= 0");
        surrogate.initial.validate();
        surrogate.per_round.validate();
    }
};

struct Candidate {
    Vector theta;             ///< physical units
    Vector unit;              ///< normalized coordinates used for exclusion
    std::size_t latent_draw = 0;
    double acquisition = 0.0;
    ExclusionSet exclusion;   ///< balls in force when this candidate was chosen
};

struct BatchPlan {
    std::size_t round = 0;
    std::vector<Candidate> candidates;
};

struct SelectionOptions {
    /// Restart the selection RNG from the same state for every candidate,
    /// so each k sees the same latent draw and the same targets.
    bool replay_rng_per_candidate = false;
};

/**
 * Choose `cfg.batch_size` candidates. For each k: draw a fresh latent z
 * from q(z | whole dataset), sample targets outside the balls around the
 * candidates chosen so far (no balls with no_target_penalization), predict,
 * and keep the UCB argmax.
 */
template <typename Rng>
BatchPlan select_batch(const anp::AnpModel& model, const EvaluationDataset& data, const BboConfig& cfg, Rng& rng,
                       const SelectionOptions& options = {})
{
    if (data.empty()) throw PreconditionError("select_batch: dataset is empty");
    const anp::ContextSet ctx = data.context_set();
    const anp::LatentGaussian q = anp::encode_latent(model, ctx);
    const Rng start = rng;

    BatchPlan plan;
    ExclusionSet chosen{{}, cfg.delta};
    for (std::size_t k = 0; k < cfg.batch_size; ++k) {
        Rng replay = start;
        Rng& r = options.replay_rng_per_candidate ? replay : rng;
        const Vector z = anp::sample_latent(q, r);
        const ExclusionSet active = cfg.no_target_penalization ? ExclusionSet{{}, cfg.delta} : chosen;
        const anp::TargetSet targets = penalized_target_sample(data.domain().dim(), active, cfg.target_samples, r);
        const anp::AnpPrediction pred = anp::predict(model, ctx, targets, z);
        const Vector acq = ucb(pred, cfg.beta);
        const Eigen::Index best = argmax_first(acq);

        Candidate c;
        c.unit = targets.theta.row(best).transpose();
        c.theta = data.domain().denormalize(c.unit);
        c.latent_draw = k;
        c.acquisition = acq(best);
        c.exclusion = active;
        chosen.centers.push_back(c.unit);
        plan.candidates.push_back(std::move(c));
    }
    return plan;
}

struct EvaluationOutcome {
    double cost = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
    double wall_ms = 0.0;
};

/// Evaluate one theta, turning exceptions and non-finite costs into a
/// failed outcome.
inline EvaluationOutcome evaluate_one(const Objective& objective, const Vector& theta, std::uint64_t subseed)
{
    EvaluationOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        out.cost = objective.evaluate(theta, subseed);
        out.ok = std::isfinite(out.cost);
        if (!out.ok) out.error = "non-finite cost";
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

using BatchEvaluator = std::function<std::vector<EvaluationOutcome>(
    const Objective&, const std::vector<Vector>&, const std::vector<std::uint64_t>&)>;

inline std::vector<EvaluationOutcome> evaluate_serially(const Objective& objective, const std::vector<Vector>& thetas,
                                                        const std::vector<std::uint64_t>& subseeds)
{
    std::vector<EvaluationOutcome> out;
    out.reserve(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) out.push_back(evaluate_one(objective, thetas[i], subseeds[i]));
    return out;
}

struct HistoryEntry {
    std::size_t index = 0;        ///< evaluation index over the whole run
    std::size_t round = 0;        ///< 0 for the initial design
    std::size_t batch_index = 0;  ///< position within the round
    Vector theta;
    double cost = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
    double incumbent = std::numeric_limits<double>::infinity();
    double wall_ms = 0.0;
};

struct PhaseTiming {
    std::size_t round = 0;
    double evaluate_ms = 0.0;
    double train_ms = 0.0;
    double select_ms = 0.0;
};

struct OptimizationHistory {
    std::vector<HistoryEntry> entries;
    std::vector<BatchPlan> batches;
    std::vector<PhaseTiming> timings;
    std::vector<double> final_training_loss;  ///< last-step loss of every training run
    std::size_t training_runs = 0;
    bool completed = true;
    std::string error;
    std::optional<anp::AnpModel> surrogate;

    std::size_t failures() const
    {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.ok ? 0 : 1;
        return n;
    }

    /// Entry with the lowest successful cost (earliest wins ties).
    const HistoryEntry* best() const
    {
        const HistoryEntry* b = nullptr;
        for (const auto& e : entries)
            if (e.ok && (b == nullptr || e.cost < b->cost)) b = &e;
        return b;
    }

    double incumbent() const
    {
        return entries.empty() ? std::numeric_limits<double>::infinity() : entries.back().incumbent;
    }
};

using LogSink = std::function<void(const std::string&)>;

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

/// Evaluate `thetas` as one round and append results to history and data.
/// Returns the number of successful evaluations.
inline std::size_t evaluate_round(const Objective& objective, const BboConfig& cfg, std::size_t round,
                                  const std::vector<Vector>& thetas, const BatchEvaluator& evaluator,
                                  EvaluationDataset& data, OptimizationHistory& history)
{
    std::vector<std::uint64_t> subseeds;
    subseeds.reserve(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i)
        subseeds.push_back(derive_seed(cfg.seed, {seed_tag::evaluation, history.entries.size() + i}));
    const auto outcomes = evaluator(objective, thetas, subseeds);
    if (outcomes.size() != thetas.size()) throw ConfigurationError("evaluator returned the wrong number of results");

    std::size_t ok = 0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        HistoryEntry e;
        e.index = history.entries.size();
        e.round = round;
        e.batch_index = i;
        e.theta = thetas[i];
        e.cost = outcomes[i].cost;
        e.ok = outcomes[i].ok;
        e.error = outcomes[i].error;
        e.wall_ms = outcomes[i].wall_ms;
        const double previous = history.incumbent();
        e.incumbent = e.ok ? std::min(previous, e.cost) : previous;
        if (e.ok) {
            data.append(e.theta, e.cost);
            ++ok;
        }
        history.entries.push_back(std::move(e));
    }
    return ok;
}

} // namespace detail

/**
 * Full optimization loop: Sobol initial design, initial surrogate fit, then
 * `cfg.rounds` rounds of select / evaluate / warm-started refit (the refit
 * is skipped with no_retrain). Failed evaluations are kept in the history
 * and left out of the dataset; the run stops early, with `completed` false,
 * only when every evaluation of a round fails.
 */
inline OptimizationHistory run(const Objective& objective, const BboConfig& cfg,
                               const BatchEvaluator& evaluator = evaluate_serially, const LogSink& log = {})
{
    cfg.validate();
    objective.domain.validate();
    auto say = [&](const std::string& msg) {
        if (log) log(msg);
    };

    OptimizationHistory history;
    EvaluationDataset data(objective.domain);

    PhaseTiming t0{0};
    auto clock = std::chrono::steady_clock::now();
    const std::optional<std::uint64_t> scramble =
        cfg.scramble_initial_design ? std::optional<std::uint64_t>(derive_seed(cfg.seed, {seed_tag::initial_design}))
                                    : std::nullopt;
    const auto design = sobol_init(objective.domain, cfg.initial_points, scramble);
    const std::size_t ok0 = detail::evaluate_round(objective, cfg, 0, design, evaluator, data, history);
    t0.evaluate_ms = detail::elapsed_ms(clock);
    say("initial design: " + std::to_string(ok0) + "/" + std::to_string(design.size()) + " evaluations succeeded");
    if (ok0 < 2) {
        history.completed = false;
        history.error = "initial design produced fewer than 2 successful evaluations";
        history.timings.push_back(t0);
        return history;
    }

    anp::AnpDims dims = cfg.surrogate.dims;
    dims.input_dim = objective.domain.dim();
    anp::AnpModel model(dims, derive_seed(cfg.seed, {seed_tag::model_init}));

    clock = std::chrono::steady_clock::now();
    try {
        const auto report = anp::train(model, data.context_set(), cfg.surrogate.initial, nullptr,
                                       derive_seed(cfg.seed, {seed_tag::training, 0}));
        history.final_training_loss.push_back(report.losses.back());
    } catch (const Error& e) {
        history.completed = false;
        history.error = std::string("initial training failed: ") + e.what();
        history.timings.push_back(t0);
        return history;
    }
    ++history.training_runs;
    t0.train_ms = detail::elapsed_ms(clock);
    history.timings.push_back(t0);
    say("initial training: " + std::to_string(t0.train_ms) + " ms");

    for (std::size_t round = 1; round <= cfg.rounds; ++round) {
        PhaseTiming timing{round};
        try {
            clock = std::chrono::steady_clock::now();
            std::mt19937_64 rng(derive_seed(cfg.seed, {seed_tag::selection, round}));
            BatchPlan plan = select_batch(model, data, cfg, rng);
            plan.round = round;
            timing.select_ms = detail::elapsed_ms(clock);

            std::vector<Vector> thetas;
            for (const auto& c : plan.candidates) thetas.push_back(c.theta);
            history.batches.push_back(std::move(plan));

            clock = std::chrono::steady_clock::now();
            const std::size_t ok = detail::evaluate_round(objective, cfg, round, thetas, evaluator, data, history);
            timing.evaluate_ms = detail::elapsed_ms(clock);
            if (ok == 0) {
                history.completed = false;
                history.error = "every evaluation of round " + std::to_string(round) + " failed";
                history.timings.push_back(timing);
                break;
            }

            if (!cfg.no_retrain) {
                clock = std::chrono::steady_clock::now();
                const auto report = anp::train(model, data.context_set(), cfg.surrogate.per_round, nullptr,
                                               derive_seed(cfg.seed, {seed_tag::training, round}));
                history.final_training_loss.push_back(report.losses.back());
                ++history.training_runs;
                timing.train_ms = detail::elapsed_ms(clock);
            }
        } catch (const Error& e) {
            history.completed = false;
            history.error = "round " + std::to_string(round) + ": " + e.what();
            history.timings.push_back(timing);
            break;
        }
        history.timings.push_back(timing);
        say("round " + std::to_string(round) + ": incumbent " + std::to_string(history.incumbent()));
    }
    history.surrogate = std::move(model);
    return history;
}

} // namespace anpbbo::bbo
