#pragma once

#include <algorithm>
#include <memory>

#include "anpbbo/bbo/objective.hpp"
#include "anpbbo/objectives/cost.hpp"
#include "anpbbo/objectives/exemplar.hpp"
#include "anpbbo/objectives/measurement.hpp"

namespace anpbbo::objectives {

struct CalibrationSetup {
    int days_train = 2;
    int days_test = 3;
    MeasurementModel measurement;
    bool noise_free = false;  ///< no noise and no quantization
    TwinConstants constants;
};

/**
 * Twin calibration problem. The measured series y* is generated once at
 * construction (true parameters, simulate, corrupt); afterwards every call
 * is a pure function of theta. The cost covers the first `days_train`
 * days; the remaining `days_test` days are scored separately.
 */
class CalibrationObjective {
public:
    explicit CalibrationObjective(CalibrationSetup setup) : setup_(std::move(setup))
    {
        if (setup_.days_train < 1) throw PreconditionError("calibration: days_train must be >= 1");
        if (setup_.days_test < 0) throw PreconditionError("calibration: days_test must be >= 0");
        MeasurementModel m = setup_.measurement;
        if (setup_.noise_free) {
            m.temperature_variance = 0.0;
            m.humidity_variance = 0.0;
            m.quantize = false;
        }
        const auto clean = simulate_twin(TwinParameters::from_vector(twin_true_theta()), total_days(),
                                         setup_.constants);
        measured_ = corrupt_measurements(clean, m);
        const auto train = measured_.window(0, train_samples());
        Eigen::VectorXd w(kChannels);
        for (Eigen::Index ch = 0; ch < kChannels; ++ch) {
            const auto row = train.values.row(ch).array();
            const auto dof = static_cast<double>(std::max<Eigen::Index>(row.size() - 1, 1));
            const double var = (row - row.mean()).square().sum() / dof;
            w(ch) = var > 0.0 ? 1.0 / var : 1.0;
        }
        weights_ = CostWeights::per_channel(w, train_samples());
    }

    int total_days() const { return setup_.days_train + setup_.days_test; }
    Eigen::Index train_samples() const { return static_cast<Eigen::Index>(setup_.days_train) * kSamplesPerDay; }
    Eigen::Index test_samples() const { return static_cast<Eigen::Index>(setup_.days_test) * kSamplesPerDay; }

    const OutputSeries& measured() const noexcept { return measured_; }
    const CostWeights& weights() const noexcept { return weights_; }
    const CalibrationSetup& setup() const noexcept { return setup_; }
    bbo::SearchDomain domain() const { return twin_domain(); }

    /// Calibration cost over the training window.
    double cost(const Eigen::VectorXd& theta) const
    {
        const auto sim = simulate_twin(TwinParameters::from_vector(theta), setup_.days_train, setup_.constants);
        return calibration_cost(measured_.window(0, train_samples()), sim, weights_);
    }

    /// Per-channel ||eps|| / sqrt(T) over the held-out days.
    Eigen::VectorXd held_out_cvrmse(const Eigen::VectorXd& theta) const
    {
        if (setup_.days_test < 1) throw PreconditionError("calibration: no held-out days configured");
        const auto sim = simulate_twin(TwinParameters::from_vector(theta), total_days(), setup_.constants);
        return channel_cvrmse(measured_.window(train_samples(), test_samples()),
                              sim.window(train_samples(), test_samples()));
    }

private:
    CalibrationSetup setup_;
    OutputSeries measured_;
    CostWeights weights_;
};

inline std::shared_ptr<const CalibrationObjective> make_calibration_objective(int days_train,
                                                                              std::uint64_t measurement_seed,
                                                                              int days_test = 3,
                                                                              bool noise_free = false)
{
    CalibrationSetup setup;
    setup.days_train = days_train;
    setup.days_test = days_test;
    setup.measurement.seed = measurement_seed;
    setup.noise_free = noise_free;
    return std::make_shared<const CalibrationObjective>(std::move(setup));
}

/// Engine-facing evaluator; keeps the calibration problem alive.
inline bbo::Objective as_objective(std::shared_ptr<const CalibrationObjective> problem, std::string name = "twin")
{
    auto domain = problem->domain();
    return {std::move(name), std::move(domain),
            [problem](const bbo::Vector& theta, std::uint64_t) { return problem->cost(theta); }};
}

inline bbo::Objective exemplar_objective()
{
    return {"exemplar1d", bbo::SearchDomain::unit(1),
            [](const bbo::Vector& theta, std::uint64_t) { return exemplar_1d(theta(0)); }};
}

} // namespace anpbbo::objectives
