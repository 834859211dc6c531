#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "anpbbo/objectives/calibration.hpp"
#include "anpbbo/objectives/series_csv.hpp"

using namespace anpbbo;
using namespace anpbbo::objectives;

namespace {

/// Independent transcription of the zone dynamics.
struct ReferenceTwin {
    std::array<double, 12> th;
    TwinConstants k;

    std::array<double, 6> rates(double hour, const std::array<double, 6>& x) const
    {
        const double alpha[3] = {0.01 * th[0], 0.01 * th[1], 0.01 * th[3]};
        const double beta[3] = {th[4], th[5], th[6]};
        const double lambda[3] = {th[10], th[7], th[2]};
        const double start[3] = {5.0, 8.5, 15.0}, stop[3] = {14.0, 18.0, 24.0};
        const double h = std::fmod(hour, 24.0);
        const double t_amb = th[9] + k.ambient_amplitude * std::sin(2.0 * std::numbers::pi * (h - 9.0) / 24.0);
        const double sun = k.solar_gain * std::max(0.0, std::sin(std::numbers::pi * (h - 6.0) / 12.0));
        std::array<double, 6> d{};
        for (int i = 0; i < 3; ++i) {
            const double occ = (h >= start[i] && h < stop[i]) ? 1.0 : 0.0;
            d[i] = alpha[i] * (t_amb - x[i]) + beta[i] * occ + sun;
            d[i + 3] = 0.1 * th[11] * (th[8] - x[i + 3]) + lambda[i] * occ;
        }
        return d;
    }

    /// Classical RK4 with step `dt_s` seconds; samples every 15 minutes.
    std::vector<std::array<double, 6>> rk4(int days, double dt_s) const
    {
        std::array<double, 6> x{20, 20, 20, 8, 8, 8};
        std::vector<std::array<double, 6>> out;
        const int per_sample = static_cast<int>(std::lround(900.0 / dt_s));
        const double dt = dt_s / 3600.0;
        double t = 0.0;
        for (int s = 0; s < days * 96; ++s) {
            out.push_back(x);
            for (int j = 0; j < per_sample; ++j) {
                auto add = [&](const std::array<double, 6>& a, double f) {
                    std::array<double, 6> r;
                    for (int c = 0; c < 6; ++c) r[c] = x[c] + f * a[c];
                    return r;
                };
                const auto k1 = rates(t, x);
                const auto k2 = rates(t + dt / 2, add(k1, dt / 2));
                const auto k3 = rates(t + dt / 2, add(k2, dt / 2));
                const auto k4 = rates(t + dt, add(k3, dt));
                for (int c = 0; c < 6; ++c) x[c] += dt / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
                t += dt;
            }
        }
        return out;
    }
};

TwinParameters truth() { return TwinParameters::from_vector(twin_true_theta()); }

double brute_force_cost(const OutputSeries& a, const OutputSeries& b, const Eigen::VectorXd& w)
{
    double total = 0.0;
    for (Eigen::Index ch = 0; ch < a.channels(); ++ch)
        for (Eigen::Index s = 0; s < a.samples(); ++s) {
            const double e = a.values(ch, s) - b.values(ch, s);
            total += w(ch) * e * e;
        }
    return std::log(std::max(total, 1e-12));
}

} // namespace

TEST(Exemplar, ClosedFormValues)
{
    EXPECT_EQ(exemplar_1d(0.0), 0.0);
    EXPECT_NEAR(exemplar_1d(1.0), std::sin(20.0) + 100.0 / 9.0 - 10.0, 1e-13);
    EXPECT_NEAR(exemplar_1d(1.0), 2.0241, 1e-4);
    EXPECT_THROW(exemplar_1d(1.01), PreconditionError);
    EXPECT_THROW(exemplar_1d(std::nan("")), PreconditionError);
}

TEST(Exemplar, GridMinimizerMatchesTheStatedOptimum)
{
    double best = INFINITY, arg = -1.0;
    for (int i = 0; i <= 1000000; ++i) {
        const double x = i / 1e6;
        if (exemplar_1d(x) < best) {
            best = exemplar_1d(x);
            arg = x;
        }
    }
    EXPECT_NEAR(arg, kExemplarOptimum, 5e-4);
}

TEST(Twin, TruthIsInsideTheSearchBox)
{
    EXPECT_TRUE(twin_domain().contains(twin_true_theta()));
    EXPECT_EQ(twin_domain().dim(), 12);
}

TEST(Twin, ValidateRejectsParametersOutsideTheBox)
{
    auto p = truth();
    p.theta[8] = 20.5;
    EXPECT_THROW(simulate_twin(p, 1), PreconditionError);
    EXPECT_THROW(simulate_twin(truth(), 0), PreconditionError);
}

TEST(Twin, EquilibriumWithoutForcingStaysPut)
{
    ZoneCoefficients c;
    c.envelope = {0.08, 0.05, 0.03};
    c.ambient_humidity = 8.0;
    c.ambient_mean_temperature = 20.0;
    c.ventilation = 0.6;
    TwinConstants k;
    k.solar_gain = 0.0;
    k.ambient_amplitude = 0.0;
    const auto out = simulate_zones(c, 2, k);
    for (Eigen::Index s = 0; s < out.samples(); ++s) {
        for (int z = 0; z < 3; ++z) {
            EXPECT_EQ(out.values(z, s), 20.0);
            EXPECT_EQ(out.values(z + 3, s), 8.0);
        }
    }
}

TEST(Twin, ConvergesToAmbientAfterTenTimeConstants)
{
    ZoneCoefficients c;
    c.envelope = {0.5, 0.4, 0.3};
    c.ambient_mean_temperature = 12.0;
    c.ambient_humidity = 15.0;
    c.ventilation = 0.6;
    TwinConstants k;
    k.solar_gain = 0.0;
    k.ambient_amplitude = 0.0;
    const auto out = simulate_zones(c, 2, k);
    const Eigen::Index after = static_cast<Eigen::Index>(std::ceil(10.0 / 0.3 * 4.0));
    for (int z = 0; z < 3; ++z) {
        EXPECT_NEAR(out.values(z, after), 12.0, 0.01);
        EXPECT_NEAR(out.values(z + 3, after), 15.0, 0.01);
    }
}

TEST(Twin, RelaxationFollowsTheEnvelopeTimeConstant)
{
    ZoneCoefficients c;
    c.envelope = {0.08, 0.05, 0.03};
    c.ambient_mean_temperature = 10.0;
    c.ambient_humidity = 8.0;
    TwinConstants k;
    k.solar_gain = 0.0;
    k.ambient_amplitude = 0.0;
    const auto out = simulate_zones(c, 1, k);
    for (int z = 0; z < 3; ++z) {
        const double a = c.envelope[z];
        for (Eigen::Index s = 0; s < out.samples(); s += 8) {
            const double hours = s * 0.25;
            const double euler = 10.0 + 10.0 * std::pow(1.0 - a / 60.0, static_cast<double>(s * 15));
            EXPECT_NEAR(out.values(z, s), euler, 1e-10);
            EXPECT_NEAR(out.values(z, s), 10.0 + 10.0 * std::exp(-a * hours), 3e-3);
        }
    }
}

TEST(Twin, EulerTracksFineRungeKutta)
{
    const auto out = simulate_twin(truth(), 2);
    ReferenceTwin ref{truth().theta, TwinConstants{}};
    const auto fine = ref.rk4(2, 1.0);
    double worst = 0.0;
    for (Eigen::Index s = 0; s < out.samples(); ++s)
        for (int c = 0; c < 6; ++c) worst = std::max(worst, std::abs(out.values(c, s) - fine[s][c]));
    EXPECT_LT(worst, 0.05);
}

TEST(Twin, SamplesAreContinuous)
{
    const auto out = simulate_twin(truth(), 3);
    for (Eigen::Index s = 1; s < out.samples(); ++s)
        for (int c = 0; c < 6; ++c) EXPECT_LT(std::abs(out.values(c, s) - out.values(c, s - 1)), 2.0);
}

TEST(Twin, GoldenTraceAtTruth)
{
    const auto golden = read_series_csv(std::filesystem::path(ANPBBO_TEST_DATA) / "twin_truth_5d.csv");
    const auto out = simulate_twin(truth(), 5);
    ASSERT_EQ(golden.samples(), out.samples());
    EXPECT_EQ(golden.step_minutes, 15.0);
    EXPECT_EQ(golden.values, out.values);
}

TEST(Twin, WindowOffsetsStartTime)
{
    const auto out = simulate_twin(truth(), 2);
    const auto w = out.window(96, 10);
    EXPECT_EQ(w.start_minutes, 1440.0);
    EXPECT_EQ(w.values, out.values.middleCols(96, 10));
    EXPECT_THROW(out.window(190, 10), PreconditionError);
}

TEST(Measurement, QuantizationRoundsToSensorResolution)
{
    EXPECT_EQ(quantize(21.37, 0.1), 21.4);
    EXPECT_EQ(quantize(21.35, 0.1), 21.4);
    EXPECT_EQ(quantize(21.34, 0.1), 21.3);
    EXPECT_EQ(quantize(-0.04, 0.1), 0.0);
    EXPECT_EQ(quantize(7.25, 0.5), 7.0);
}

TEST(Measurement, QuantizedValuesAreDecimalMultiples)
{
    MeasurementModel m;
    const auto out = corrupt_measurements(simulate_twin(truth(), 1), m);
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        const double v = out.values(i);
        EXPECT_EQ(v, parse_double(format_fixed(v, 1)));
    }
}

TEST(Measurement, NoiseVarianceMatchesTheModel)
{
    OutputSeries zero;
    zero.values = Series::Zero(6, 100000);
    MeasurementModel m;
    m.quantize = false;
    m.seed = 99;
    const auto out = corrupt_measurements(zero, m);
    for (Eigen::Index ch = 0; ch < 6; ++ch) {
        const double var = out.values.row(ch).squaredNorm() / 100000.0;
        const double expected = ch < 3 ? 0.5 : 4.0;
        EXPECT_NEAR(var / expected, 1.0, 0.05);
        EXPECT_LT(std::abs(out.values.row(ch).mean()), 4.0 * std::sqrt(expected / 100000.0));
    }
}

TEST(Measurement, SeedDeterminesTheNoise)
{
    MeasurementModel a, b;
    b.seed = a.seed + 1;
    const auto clean = simulate_twin(truth(), 1);
    EXPECT_EQ(corrupt_measurements(clean, a).values, corrupt_measurements(clean, a).values);
    EXPECT_NE(corrupt_measurements(clean, a).values, corrupt_measurements(clean, b).values);
}

TEST(Cost, IdenticalSeriesHitTheFloor)
{
    const auto s = simulate_twin(truth(), 1);
    const auto w = CostWeights::per_channel(Eigen::VectorXd::Ones(6), s.samples());
    EXPECT_NEAR(calibration_cost(s, s, w), std::log(1e-12), 1e-12);
    EXPECT_NEAR(calibration_cost(s, s, w), -27.631021115928547, 1e-12);
}

TEST(Cost, IsTheLogOfTheWeightedSquaredResidual)
{
    OutputSeries a, b;
    a.values = Series::Zero(6, 3);
    b.values = Series::Zero(6, 3);
    b.values(0, 1) = 2.0;
    b.values(4, 2) = -1.0;
    Eigen::VectorXd w(6);
    w << 0.5, 1, 1, 1, 3, 1;
    EXPECT_NEAR(calibration_cost(a, b, CostWeights::per_channel(w, 3)), std::log(0.5 * 4 + 3 * 1), 1e-15);
}

TEST(Cost, AgreesWithBruteForceOnRandomSeries)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    OutputSeries a, b;
    a.values = Series(6, 50);
    b.values = Series(6, 50);
    for (Eigen::Index i = 0; i < a.values.size(); ++i) {
        a.values(i) = n(rng);
        b.values(i) = n(rng);
    }
    Eigen::VectorXd w(6);
    w << 0.1, 0.2, 0.3, 1.5, 2.5, 3.5;
    EXPECT_NEAR(calibration_cost(a, b, CostWeights::per_channel(w, 50)), brute_force_cost(a, b, w), 1e-12);
}

TEST(Cost, ShapeMismatchAndBadWeightsAreRejected)
{
    OutputSeries a, b;
    a.values = Series::Zero(6, 3);
    b.values = Series::Zero(6, 4);
    EXPECT_THROW(calibration_cost(a, b, CostWeights::per_channel(Eigen::VectorXd::Ones(6), 3)), PreconditionError);
    EXPECT_THROW(calibration_cost(a, a, CostWeights::per_channel(Eigen::VectorXd::Zero(6), 3)), PreconditionError);
}

TEST(Cvrmse, Examples)
{
    const std::vector<double> m{1, 2, 3}, s{1, 2, 5}, t{2, 3, 4};
    EXPECT_NEAR(cvrmse(m, s), 2.0 / std::sqrt(3.0), 1e-15);
    EXPECT_EQ(cvrmse(m, m), 0.0);
    EXPECT_NEAR(cvrmse(m, t), 1.0, 1e-15);
    EXPECT_THROW(cvrmse(m, std::vector<double>{1, 2}), PreconditionError);
    EXPECT_THROW(cvrmse(std::vector<double>{}, std::vector<double>{}), PreconditionError);
}

TEST(Calibration, NoiseFreeTruthIsTheGlobalMinimum)
{
    const auto problem = make_calibration_objective(2, 1, 3, true);
    const Eigen::VectorXd th = twin_true_theta();
    const double at_truth = problem->cost(th);
    EXPECT_NEAR(at_truth, std::log(1e-12), 1e-9);
    const auto domain = problem->domain();
    for (int i = 0; i < 12; ++i) {
        Eigen::VectorXd p = th;
        p(i) = th(i) * 1.1 > domain.upper(i) ? th(i) * 0.9 : th(i) * 1.1;
        EXPECT_GT(problem->cost(p), at_truth) << "theta" << i + 1;
    }
    EXPECT_LT(problem->held_out_cvrmse(th).maxCoeff(), 1e-12);
}

TEST(Calibration, WeightsAreInverseSampleVariancesOfTheTrainingWindow)
{
    const auto problem = make_calibration_objective(2, 11);
    const auto train = problem->measured().window(0, problem->train_samples());
    for (Eigen::Index ch = 0; ch < 6; ++ch) {
        double mean = 0.0;
        for (Eigen::Index s = 0; s < train.samples(); ++s) mean += train.values(ch, s);
        mean /= static_cast<double>(train.samples());
        double ss = 0.0;
        for (Eigen::Index s = 0; s < train.samples(); ++s) ss += (train.values(ch, s) - mean) * (train.values(ch, s) - mean);
        EXPECT_NEAR(problem->weights().diagonal(ch, 0), (train.samples() - 1) / ss, 1e-12);
    }
}

TEST(Calibration, CostMatchesBruteForceAndIsReproducible)
{
    const auto problem = make_calibration_objective(2, 20240917);
    const Eigen::VectorXd th = twin_true_theta();
    const auto sim = simulate_twin(truth(), 2);
    Eigen::VectorXd w(6);
    for (int ch = 0; ch < 6; ++ch) w(ch) = problem->weights().diagonal(ch, 0);
    const double oracle = brute_force_cost(problem->measured().window(0, 192), sim, w);
    EXPECT_NEAR(problem->cost(th), oracle, 1e-12);
    EXPECT_EQ(problem->cost(th), make_calibration_objective(2, 20240917)->cost(th));
    EXPECT_NE(problem->cost(th), make_calibration_objective(2, 20240918)->cost(th));
    EXPECT_NEAR(problem->cost(th), 5.8811, 5e-4);
}

TEST(Calibration, AsObjectiveIgnoresTheSubSeed)
{
    const auto obj = as_objective(make_calibration_objective(2, 3));
    const Eigen::VectorXd th = twin_true_theta();
    EXPECT_EQ(obj.evaluate(th, 1), obj.evaluate(th, 2));
    EXPECT_EQ(obj.name, "twin");
}

TEST(SeriesCsv, RoundTripIsExact)
{
    const auto out = simulate_twin(truth(), 1);
    std::stringstream ss;
    write_series_csv(out, ss);
    const auto back = read_series_csv(ss);
    EXPECT_EQ(back.values, out.values);
    EXPECT_EQ(back.step_minutes, 15.0);
}

TEST(SeriesCsv, MeasuredPrecisionWritesOneDecimal)
{
    OutputSeries s;
    s.values = Series::Constant(6, 1, 21.4);
    std::stringstream ss;
    write_series_csv(s, ss, SeriesPrecision::measured);
    EXPECT_EQ(ss.str(), std::string(kSeriesHeader) + "\n0,21.4,21.4,21.4,21.4,21.4,21.4\n");
}

TEST(SeriesCsv, MalformedInputIsConfigurationError)
{
    std::stringstream bad("time_min,T1\n0,1\n");
    EXPECT_THROW(read_series_csv(bad), ConfigurationError);
}
