// Command-line front end: optimization runs, ablation sweeps, twin traces.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anpbbo/harness/experiment.hpp"
#include "anpbbo/objectives/series_csv.hpp"
#include "anpbbo/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

using namespace anpbbo;

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

std::vector<double> parse_theta(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(parse_double(item));
        } catch (const std::invalid_argument&) {
            throw ConfigurationError("--theta: '" + item + "' is not a number");
        }
    }
    return out;
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> repeats;

    void apply(harness::ExperimentConfig& cfg) const
    {
        if (seed) cfg.bbo.seed = *seed;
        if (out) cfg.output.directory = *out;
        if (workers) {
            if (*workers < 1) throw ConfigurationError("--workers: must be >= 1");
            cfg.output.workers = *workers;
        }
        if (repeats) cfg.output.repeats = *repeats;
    }
};

int cmd_run(const std::string& config_path, const Overrides& overrides)
{
    auto cfg = harness::load_config(config_path);
    overrides.apply(cfg);
    const auto result = harness::run_experiment(cfg, log_line);
    std::cout << result.directory.string() << '\n';
    if (!result.history.completed) {
        std::cerr << "run stopped early: " << result.history.error << '\n';
        return kExitRuntime;
    }
    if (const auto* best = result.history.best())
        std::cerr << "best cost " << format_double(best->cost) << " at evaluation " << best->index << '\n';
    return kExitOk;
}

int cmd_ablate(const std::string& config_path, const Overrides& overrides)
{
    auto cfg = harness::load_config(config_path);
    overrides.apply(cfg);
    const auto result = harness::run_ablation(cfg, log_line);
    std::cout << result.directory.string() << '\n';
    for (const auto& arm : result.arms)
        for (const auto& h : arm.runs)
            if (!h.completed) {
                std::cerr << arm.arm.name << ": run stopped early: " << h.error << '\n';
                return kExitRuntime;
            }
    return kExitOk;
}

int cmd_simulate(const std::string& theta_text, int days, const std::string& out)
{
    const auto values = parse_theta(theta_text);
    if (values.size() != static_cast<std::size_t>(objectives::kTwinParameters))
        throw ConfigurationError("--theta: expected 12 comma-separated values, got " + std::to_string(values.size()));
    if (days < 1) throw ConfigurationError("--days: must be >= 1");
    const auto params = objectives::TwinParameters::from_vector(
        Eigen::Map<const Eigen::VectorXd>(values.data(), objectives::kTwinParameters));
    try {
        params.validate();
    } catch (const PreconditionError& e) {
        throw ConfigurationError(std::string("--theta: ") + e.what());
    }
    objectives::write_series_csv(objectives::simulate_twin(params, days), std::filesystem::path(out));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Batch Bayesian optimization with an attentive neural process surrogate"};
    app.set_version_flag("--version", std::string(anpbbo::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;

    auto* run = app.add_subcommand("run", "Run one optimization and write its artifacts");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--seed", overrides.seed, "Override bbo.seed");
    run->add_option("--out", overrides.out, "Override output.directory");
    run->add_option("--workers", overrides.workers, "Override output.workers");

    auto* ablate = app.add_subcommand("ablate", "Run the full and ablated arms over shared seeds");
    ablate->add_option("--config", config_path, "JSON config file")->required();
    ablate->add_option("--repeats", overrides.repeats, "Seeds per arm (>= 3)");
    ablate->add_option("--seed", overrides.seed, "First seed");
    ablate->add_option("--out", overrides.out, "Override output.directory");
    ablate->add_option("--workers", overrides.workers, "Override output.workers");

    std::string theta;
    int days = 1;
    std::string trace_out;
    auto* simulate = app.add_subcommand("simulate", "Write a twin trace as CSV");
    simulate->add_option("--theta", theta, "12 comma-separated parameter values")->required();
    simulate->add_option("--days", days, "Simulated days")->required();
    simulate->add_option("--out", trace_out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config_path, overrides);
        if (*ablate) return cmd_ablate(config_path, overrides);
        if (*simulate) return cmd_simulate(theta, days, trace_out);
    } catch (const anpbbo::ConfigurationError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}
