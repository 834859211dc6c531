#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anpbbo/bbo/engine.hpp"
#include "anpbbo/objectives/measurement.hpp"

namespace anpbbo::harness {

using json = nlohmann::json;

struct ObjectiveConfig {
    std::string name = "exemplar1d";  ///< exemplar1d | twin | twin-noisefree
    int days_train = 2;
    int days_test = 3;
    std::uint64_t measurement_seed = objectives::MeasurementModel{}.seed;
};

struct OutputConfig {
    std::string directory = "runs";
    std::size_t workers = 1;
    std::size_t repeats = 3;
};

/*
 * Schema (JSON, every field optional, unknown fields rejected):
 *
 *   objective: name, days_train, days_test, measurement_seed
 *   bbo:       initial_points, rounds, batch_size, target_samples, delta,
 *              beta, no_target_penalization, no_retrain,
 *              scramble_initial_design, seed
 *   anp:       hidden, latent, heads, leaky_slope,
 *              initial_schedule, per_round_schedule
 *              (schedule: steps, learning_rate, milestones [{after_step,
 *               factor}], minibatch, set_size_min, set_size_max)
 *   output:    directory, workers, repeats
 */
struct ExperimentConfig {
    ObjectiveConfig objective;
    bbo::BboConfig bbo;
    OutputConfig output;
};

namespace detail {

/// Reads fields of one JSON object, collecting "path: message" diagnostics
/// instead of stopping at the first problem.
class FieldReader {
public:
    FieldReader(const json& node, std::string path, std::vector<std::string>& errors)
        : node_(node), path_(std::move(path)), errors_(errors)
    {
        if (!node_.is_object()) fail(path_, "expected an object");
    }

    bool ok() const { return node_.is_object(); }

    void size(const char* key, std::size_t& out, std::size_t min_value = 0)
    {
        const json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<long long>() < 0)) {
            fail(key, "expected a non-negative integer");
            return;
        }
        const auto value = v->get<std::uint64_t>();
        if (value < min_value) {
            fail(key, "must be >= " + std::to_string(min_value));
            return;
        }
        out = static_cast<std::size_t>(value);
    }

    void integer(const char* key, int& out, int min_value)
    {
        const json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_number_integer()) {
            fail(key, "expected an integer");
            return;
        }
        const auto value = v->get<long long>();
        if (value < min_value || value > 100000) {
            fail(key, "must be in [" + std::to_string(min_value) + ", 100000]");
            return;
        }
        out = static_cast<int>(value);
    }

    void seed(const char* key, std::uint64_t& out)
    {
        const json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
            fail(key, "expected a non-negative integer");
            return;
        }
        out = v->get<std::uint64_t>();
    }

    template <typename Check>
    void real(const char* key, double& out, Check valid, const char* requirement)
    {
        const json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_number()) {
            fail(key, "expected a number");
            return;
        }
        const double value = v->get<double>();
        if (!valid(value)) {
            fail(key, requirement);
            return;
        }
        out = value;
    }

    void boolean(const char* key, bool& out)
    {
        const json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_boolean()) {
            fail(key, "expected true or false");
            return;
        }
        out = v->get<bool>();
    }

    void string(const char* key, std::string& out)
    {
        const json* v = take(key);
        if (v == nullptr) return;
        if (!v->is_string()) {
            fail(key, "expected a string");
            return;
        }
        out = v->get<std::string>();
    }

    /// Child object, or nullptr when absent.
    const json* child(const char* key) { return take(key); }

    std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void fail(const std::string& key, const std::string& message)
    {
        errors_.push_back((key == path_ ? key : path(key)) + ": " + message);
    }

    /// Report every key that was never read.
    void finish()
    {
        if (!ok()) return;
        for (const auto& item : node_.items())
            if (!seen_.count(item.key())) fail(item.key(), "unknown field");
    }

private:
    const json* take(const char* key)
    {
        seen_.insert(key);
        if (!ok()) return nullptr;
        const auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    const json& node_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

inline void read_schedule(const json& node, const std::string& path, anp::TrainingSchedule& s,
                          std::vector<std::string>& errors)
{
    FieldReader r(node, path, errors);
    r.size("steps", s.total_steps, 1);
    r.real("learning_rate", s.initial_learning_rate, [](double v) { return v > 0.0 && std::isfinite(v); },
           "must be a positive number");
    r.size("minibatch", s.minibatch, 1);
    r.size("set_size_min", s.set_size_min, 1);
    r.size("set_size_max", s.set_size_max, 1);
    if (const json* ms = r.child("milestones")) {
        if (!ms->is_array()) {
            r.fail("milestones", "expected an array");
        } else {
            s.milestones.clear();
            for (std::size_t i = 0; i < ms->size(); ++i) {
                anp::Milestone m;
                FieldReader mr((*ms)[i], r.path("milestones[" + std::to_string(i) + "]"), errors);
                mr.size("after_step", m.after_step, 0);
                mr.real("factor", m.factor, [](double v) { return v > 1.0 && std::isfinite(v); }, "must be > 1");
                mr.finish();
                s.milestones.push_back(m);
            }
            for (std::size_t i = 1; i < s.milestones.size(); ++i)
                if (s.milestones[i].after_step <= s.milestones[i - 1].after_step)
                    r.fail("milestones", "after_step values must be strictly increasing");
        }
    }
    if (s.set_size_max < s.set_size_min) r.fail("set_size_max", "must be >= set_size_min");
    r.finish();
}

inline json schedule_json(const anp::TrainingSchedule& s)
{
    json ms = json::array();
    for (const auto& m : s.milestones) ms.push_back({{"after_step", m.after_step}, {"factor", m.factor}});
    return {{"steps", s.total_steps},       {"learning_rate", s.initial_learning_rate},
            {"milestones", ms},             {"minibatch", s.minibatch},
            {"set_size_min", s.set_size_min}, {"set_size_max", s.set_size_max}};
}

} // namespace detail

/// Parse and validate a config document. Throws ConfigurationError listing
/// every offending field.
inline ExperimentConfig parse_config(const json& doc)
{
    ExperimentConfig cfg;
    std::vector<std::string> errors;
    detail::FieldReader top(doc, "", errors);

    if (const json* node = top.child("objective")) {
        detail::FieldReader r(*node, "objective", errors);
        r.string("name", cfg.objective.name);
        r.integer("days_train", cfg.objective.days_train, 1);
        r.integer("days_test", cfg.objective.days_test, 0);
        r.seed("measurement_seed", cfg.objective.measurement_seed);
        r.finish();
        const auto& n = cfg.objective.name;
        if (n != "exemplar1d" && n != "twin" && n != "twin-noisefree")
            errors.push_back("objective.name: expected one of exemplar1d, twin, twin-noisefree (got '" + n + "')");
    }

    auto& b = cfg.bbo;
    if (const json* node = top.child("bbo")) {
        detail::FieldReader r(*node, "bbo", errors);
        r.size("initial_points", b.initial_points, 1);
        r.size("rounds", b.rounds, 1);
        r.size("batch_size", b.batch_size, 1);
        r.size("target_samples", b.target_samples, 1);
        r.real("delta", b.delta, [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0");
        r.real("beta", b.beta, [](double v) { return v >= 0.0 && std::isfinite(v); }, "must be >= 0");
        r.boolean("no_target_penalization", b.no_target_penalization);
        r.boolean("no_retrain", b.no_retrain);
        r.boolean("scramble_initial_design", b.scramble_initial_design);
        r.seed("seed", b.seed);
        r.finish();
    }

    if (const json* node = top.child("anp")) {
        detail::FieldReader r(*node, "anp", errors);
        auto& d = b.surrogate.dims;
        std::size_t hidden = static_cast<std::size_t>(d.hidden), latent = static_cast<std::size_t>(d.latent),
                    heads = static_cast<std::size_t>(d.heads);
        r.size("hidden", hidden, 1);
        r.size("latent", latent, 1);
        r.size("heads", heads, 1);
        r.real("leaky_slope", d.leaky_slope, [](double v) { return v >= 0.0 && v < 1.0; }, "must be in [0, 1)");
        d.hidden = static_cast<Eigen::Index>(hidden);
        d.latent = static_cast<Eigen::Index>(latent);
        d.heads = static_cast<Eigen::Index>(heads);
        if (d.latent % d.heads != 0) r.fail("heads", "must divide anp.latent");
        if (const json* s = r.child("initial_schedule"))
            detail::read_schedule(*s, "anp.initial_schedule", b.surrogate.initial, errors);
        if (const json* s = r.child("per_round_schedule"))
            detail::read_schedule(*s, "anp.per_round_schedule", b.surrogate.per_round, errors);
        r.finish();
    }

    if (const json* node = top.child("output")) {
        detail::FieldReader r(*node, "output", errors);
        r.string("directory", cfg.output.directory);
        r.size("workers", cfg.output.workers, 1);
        r.size("repeats", cfg.output.repeats, 1);
        r.finish();
    }
    top.finish();

    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigurationError(msg);
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot read config file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigurationError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

/// Canonical echo of a parsed config; parse_config(to_json(c)) == c.
inline json to_json(const ExperimentConfig& c)
{
    const auto& b = c.bbo;
    const auto& d = b.surrogate.dims;
    return {
        {"objective",
         {{"name", c.objective.name},
          {"days_train", c.objective.days_train},
          {"days_test", c.objective.days_test},
          {"measurement_seed", c.objective.measurement_seed}}},
        {"bbo",
         {{"initial_points", b.initial_points},
          {"rounds", b.rounds},
          {"batch_size", b.batch_size},
          {"target_samples", b.target_samples},
          {"delta", b.delta},
          {"beta", b.beta},
          {"no_target_penalization", b.no_target_penalization},
          {"no_retrain", b.no_retrain},
          {"scramble_initial_design", b.scramble_initial_design},
          {"seed", b.seed}}},
        {"anp",
         {{"hidden", d.hidden},
          {"latent", d.latent},
          {"heads", d.heads},
          {"leaky_slope", d.leaky_slope},
          {"initial_schedule", detail::schedule_json(b.surrogate.initial)},
          {"per_round_schedule", detail::schedule_json(b.surrogate.per_round)}}},
        {"output",
         {{"directory", c.output.directory}, {"workers", c.output.workers}, {"repeats", c.output.repeats}}},
    };
}

} // namespace anpbbo::harness
