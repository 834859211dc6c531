#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "anpbbo/anp/checkpoint.hpp"
#include "anpbbo/harness/artifacts.hpp"
#include "anpbbo/harness/config.hpp"
#include "anpbbo/harness/parallel.hpp"
#include "anpbbo/objectives/calibration.hpp"

namespace anpbbo::harness {

/// Objective plus whatever is needed to score a result afterwards.
struct ObjectiveBundle {
    bbo::Objective objective;
    std::shared_ptr<const objectives::CalibrationObjective> calibration;  ///< twin objectives only
    std::optional<bbo::Vector> truth;
    std::optional<double> optimum;  ///< known minimizer, 1-D exemplar
};

inline ObjectiveBundle make_objective(const ObjectiveConfig& c)
{
    ObjectiveBundle b;
    if (c.name == "exemplar1d") {
        b.objective = objectives::exemplar_objective();
        b.optimum = objectives::kExemplarOptimum;
        return b;
    }
    if (c.name == "twin" || c.name == "twin-noisefree") {
        b.calibration = objectives::make_calibration_objective(c.days_train, c.measurement_seed, c.days_test,
                                                               c.name == "twin-noisefree");
        b.objective = objectives::as_objective(b.calibration, c.name);
        b.truth = objectives::twin_true_theta();
        return b;
    }
    throw ConfigurationError("objective.name: unknown objective '" + c.name + "'");
}

inline json cvrmse_json(const Eigen::VectorXd& v)
{
    json o = json::object();
    for (Eigen::Index ch = 0; ch < v.size(); ++ch)
        o[objectives::channel_names()[static_cast<std::size_t>(ch)]] = number_or_null(v(ch));
    return o;
}

/// Summary of one run. Cost and incumbent figures are recomputable from
/// history.csv; phase times from timings.csv.
inline json make_report(const ExperimentConfig& cfg, const ObjectiveBundle& bundle,
                        const bbo::OptimizationHistory& history)
{
    const auto& domain = bundle.objective.domain;
    const std::size_t n0 = cfg.bbo.initial_points;
    std::size_t initial = 0;
    for (const auto& e : history.entries) initial += e.round == 0 ? 1 : 0;

    json report;
    report["objective"] = bundle.objective.name;
    report["seed"] = cfg.bbo.seed;
    report["completed"] = history.completed;
    report["error"] = history.error.empty() ? json(nullptr) : json(history.error);
    report["evaluations"] = {{"total", history.entries.size()},
                             {"initial_design", initial},
                             {"after_initial_design", history.entries.size() - initial},
                             {"failed", history.failures()},
                             {"planned_total", n0 + cfg.bbo.rounds * cfg.bbo.batch_size}};
    report["final_incumbent"] = number_or_null(history.incumbent());
    report["training_runs"] = history.training_runs;

    if (const auto* best = history.best()) {
        json params = json::array();
        for (Eigen::Index d = 0; d < domain.dim(); ++d) {
            json p{{"name", "theta" + std::to_string(d + 1)},
                   {"value", best->theta(d)},
                   {"lower", domain.lower(d)},
                   {"upper", domain.upper(d)},
                   {"inside_box", best->theta(d) >= domain.lower(d) && best->theta(d) <= domain.upper(d)}};
            if (bundle.truth) {
                p["truth"] = (*bundle.truth)(d);
                p["abs_error"] = std::abs(best->theta(d) - (*bundle.truth)(d));
            }
            params.push_back(p);
        }
        report["best"] = {{"index", best->index}, {"round", best->round}, {"cost", best->cost}, {"parameters", params}};
        if (bundle.optimum) report["best"]["distance_to_optimum"] = std::abs(best->theta(0) - *bundle.optimum);
        if (bundle.calibration && bundle.calibration->setup().days_test > 0) {
            report["held_out_cvrmse"] = cvrmse_json(bundle.calibration->held_out_cvrmse(best->theta));
            report["held_out_cvrmse_at_truth"] = cvrmse_json(bundle.calibration->held_out_cvrmse(*bundle.truth));
        }
    } else {
        report["best"] = nullptr;
    }

    double evaluate_ms = 0.0, train_ms = 0.0, select_ms = 0.0;
    for (const auto& t : history.timings) {
        evaluate_ms += t.evaluate_ms;
        train_ms += t.train_ms;
        select_ms += t.select_ms;
    }
    report["phase_ms"] = {{"simulate", evaluate_ms}, {"train", train_ms}, {"select", select_ms}};
    report["config"] = to_json(cfg);
    return report;
}

struct RunArtifacts {
    std::filesystem::path directory;
    bbo::OptimizationHistory history;
    json report;
};

inline void write_run_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                const ObjectiveBundle& bundle, const bbo::OptimizationHistory& history,
                                const json& report)
{
    const Eigen::Index dim = bundle.objective.domain.dim();
    {
        auto os = open_artifact(dir / "history.csv");
        write_history_csv(os, history, dim);
    }
    {
        auto os = open_artifact(dir / "incumbent.csv");
        write_incumbent_csv(os, history, cfg.bbo.initial_points);
    }
    {
        auto os = open_artifact(dir / "batches.jsonl");
        write_batches_jsonl(os, history);
    }
    {
        auto os = open_artifact(dir / "timings.csv");
        write_timings_csv(os, history);
    }
    {
        auto os = open_artifact(dir / "report.json");
        os << report.dump(2) << '\n';
    }
    if (history.surrogate) anp::save_checkpoint(*history.surrogate, dir / "surrogate.bin");
}

/// Run one optimization into `dir` (created by the caller).
inline RunArtifacts run_into(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                             const ObjectiveBundle& bundle, const bbo::LogSink& log = {})
{
    RunArtifacts out;
    out.directory = dir;
    {
        auto os = open_artifact(dir / "config.json");
        os << to_json(cfg).dump(2) << '\n';
    }
    out.history = bbo::run(bundle.objective, cfg.bbo, make_parallel_evaluator(cfg.output.workers), log);
    out.report = make_report(cfg, bundle, out.history);
    write_run_artifacts(dir, cfg, bundle, out.history, out.report);
    return out;
}

/**
 * Validate, build the objective, run, and write all artifacts into a new
 * run directory under `cfg.output.directory`. A run that stops early still
 * leaves its partial artifacts, with the error recorded in report.json.
 */
inline RunArtifacts run_experiment(const ExperimentConfig& cfg, const bbo::LogSink& log = {})
{
    cfg.bbo.validate();
    const ObjectiveBundle bundle = make_objective(cfg.objective);
    const auto dir = create_run_directory(cfg.output.directory, cfg.objective.name, cfg.bbo.seed);
    return run_into(dir, cfg, bundle, log);
}

inline RunArtifacts run_experiment(const std::filesystem::path& config_path, const bbo::LogSink& log = {})
{
    return run_experiment(load_config(config_path), log);
}

struct AblationArm {
    std::string name;
    bool no_target_penalization = false;
    bool no_retrain = false;
};

inline const std::vector<AblationArm>& ablation_arms()
{
    static const std::vector<AblationArm> arms{
        {"full", false, false}, {"no-tarpen", true, false}, {"no-retrain", false, true}};
    return arms;
}

struct ArmRuns {
    AblationArm arm;
    std::vector<bbo::OptimizationHistory> runs;  ///< one per seed, surrogate dropped
    std::vector<json> reports;
    std::vector<double> median_incumbent;

    double final_median() const { return median_incumbent.empty() ? std::nan("") : median_incumbent.back(); }
};

struct AblationResult {
    std::filesystem::path directory;
    std::vector<std::uint64_t> seeds;
    std::vector<ArmRuns> arms;
};

/**
 * Run every arm over seeds cfg.bbo.seed, cfg.bbo.seed + 1, ... (one per
 * repeat). Arms with the same seed share their initial design. Writes each
 * run under <dir>/<arm>/seed-<s>/, then ablation.csv and ablation.json.
 */
inline AblationResult run_ablation(const ExperimentConfig& cfg, const bbo::LogSink& log = {})
{
    if (cfg.output.repeats < 3) throw ConfigurationError("output.repeats: ablation needs at least 3 repeats");
    cfg.bbo.validate();
    const ObjectiveBundle bundle = make_objective(cfg.objective);

    AblationResult result;
    result.directory = create_run_directory(cfg.output.directory, "ablation-" + cfg.objective.name, cfg.bbo.seed);
    for (std::size_t r = 0; r < cfg.output.repeats; ++r) result.seeds.push_back(cfg.bbo.seed + r);

    for (const auto& arm : ablation_arms()) {
        ArmRuns runs{arm, {}, {}, {}};
        for (const auto seed : result.seeds) {
            ExperimentConfig c = cfg;
            c.bbo.seed = seed;
            c.bbo.no_target_penalization = arm.no_target_penalization;
            c.bbo.no_retrain = arm.no_retrain;
            const auto dir = result.directory / arm.name / ("seed-" + std::to_string(seed));
            std::filesystem::create_directories(dir);
            if (log) log(arm.name + " seed " + std::to_string(seed));
            auto run = run_into(dir, c, bundle);
            run.history.surrogate.reset();
            runs.reports.push_back(std::move(run.report));
            runs.runs.push_back(std::move(run.history));
        }
        std::vector<const bbo::OptimizationHistory*> ptrs;
        for (const auto& h : runs.runs) ptrs.push_back(&h);
        runs.median_incumbent = median_incumbents(ptrs);
        if (log) log(arm.name + ": final median incumbent " + format_double(runs.final_median()));
        result.arms.push_back(std::move(runs));
    }

    std::vector<std::string> names;
    std::vector<std::vector<double>> medians;
    json summary = {{"objective", bundle.objective.name}, {"seeds", result.seeds}, {"arms", json::array()}};
    for (const auto& a : result.arms) {
        names.push_back(a.arm.name);
        medians.push_back(a.median_incumbent);
        json finals = json::array();
        json training = json::array();
        for (const auto& h : a.runs) {
            finals.push_back(number_or_null(h.incumbent()));
            training.push_back(h.training_runs);
        }
        summary["arms"].push_back({{"name", a.arm.name},
                                   {"final_median_incumbent", number_or_null(a.final_median())},
                                   {"final_incumbents", finals},
                                   {"training_runs", training}});
    }
    summary["config"] = to_json(cfg);
    {
        auto os = open_artifact(result.directory / "ablation.csv");
        write_ablation_csv(os, names, medians, cfg.bbo.initial_points);
    }
    {
        auto os = open_artifact(result.directory / "ablation.json");
        os << summary.dump(2) << '\n';
    }
    return result;
}

} // namespace anpbbo::harness
