#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <random>

#include "anpbbo/bbo/engine.hpp"
#include "anpbbo/objectives/calibration.hpp"

using namespace anpbbo;
using namespace anpbbo::bbo;

namespace {

BboConfig tiny_config(std::uint64_t seed = 3)
{
    BboConfig cfg;
    cfg.initial_points = 12;
    cfg.rounds = 3;
    cfg.batch_size = 3;
    cfg.target_samples = 200;
    cfg.delta = 0.05;
    cfg.seed = seed;
    cfg.surrogate.dims.hidden = 16;
    cfg.surrogate.dims.latent = 16;
    cfg.surrogate.initial = {30, 1e-3, {}, 4, 4, 12};
    cfg.surrogate.per_round = {10, 5e-4, {}, 4, 4, 12};
    return cfg;
}

Objective bowl_2d()
{
    Vector lo(2), hi(2);
    lo << -1.0, 10.0;
    hi << 1.0, 20.0;
    return {"bowl", SearchDomain(lo, hi), [](const Vector& x, std::uint64_t) {
                return x(0) * x(0) + 0.01 * (x(1) - 15.0) * (x(1) - 15.0);
            }};
}

/// Star discrepancy of points in [0,1]^2, exact over anchored boxes.
double star_discrepancy(const std::vector<Vector>& pts)
{
    std::vector<double> xs{1.0}, ys{1.0};
    for (const auto& p : pts) {
        xs.push_back(p(0));
        ys.push_back(p(1));
    }
    const double n = static_cast<double>(pts.size());
    double worst = 0.0;
    for (double a : xs)
        for (double b : ys) {
            int open = 0, closed = 0;
            for (const auto& p : pts) {
                open += (p(0) < a && p(1) < b) ? 1 : 0;
                closed += (p(0) <= a && p(1) <= b) ? 1 : 0;
            }
            worst = std::max({worst, std::abs(open / n - a * b), std::abs(closed / n - a * b)});
        }
    return worst;
}

EvaluationDataset seeded_dataset(const Objective& obj, std::size_t n, std::uint64_t seed)
{
    EvaluationDataset data(obj.domain);
    for (const auto& x : sobol_init(obj.domain, n, seed)) data.append(x, obj.evaluate(x, 0));
    return data;
}

} // namespace

TEST(Sobol, OneDimensionalPrefix)
{
    const auto pts = sobol_unit_points(1, 3);
    ASSERT_EQ(pts.size(), 3u);
    EXPECT_EQ(pts[0](0), 0.5);
    EXPECT_EQ(pts[1](0), 0.75);
    EXPECT_EQ(pts[2](0), 0.25);
}

TEST(Sobol, PointsStayInsideTheBox)
{
    const auto domain = objectives::twin_domain();
    for (auto scramble : {std::optional<std::uint64_t>{}, std::optional<std::uint64_t>{77}})
        for (const auto& x : sobol_init(domain, 1000, scramble)) EXPECT_TRUE(domain.contains(x));
}

TEST(Sobol, LowerStarDiscrepancyThanRandomPoints)
{
    const auto sobol = sobol_unit_points(2, 256);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u;
    std::vector<Vector> random(256, Vector(2));
    for (auto& p : random) p << u(rng), u(rng);
    EXPECT_LT(star_discrepancy(sobol), star_discrepancy(random));
}

TEST(Sobol, UnsupportedDimensionIsConfigurationError)
{
    EXPECT_THROW(sobol_unit_points(sobol_max_dimension() + 1, 4), ConfigurationError);
    EXPECT_THROW(sobol_unit_points(0, 4), ConfigurationError);
}

TEST(Sobol, ScramblingIsSeededAndKeepsStratification)
{
    const auto a = sobol_unit_points(3, 64, 5), b = sobol_unit_points(3, 64, 5), c = sobol_unit_points(3, 64, 6);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_NE(a[0], c[0]);
    for (Eigen::Index d = 0; d < 3; ++d) {
        std::vector<int> bins(64, 0);
        for (std::size_t i = 0; i < 63; ++i) ++bins[static_cast<std::size_t>(a[i](d) * 64)];
        EXPECT_LE(*std::max_element(bins.begin(), bins.end()), 1);
    }
}

TEST(Ucb, Examples)
{
    EXPECT_EQ(ucb(0.0, 1.0, 3.0), 3.0);
    EXPECT_EQ(ucb(-1.25, 0.7, 0.0), -1.25);
    double previous = -INFINITY;
    for (double s = 0.1; s < 5.0; s += 0.1) {
        EXPECT_GE(ucb(0.3, s, 3.0), previous);
        previous = ucb(0.3, s, 3.0);
    }
}

TEST(Ucb, ArgmaxPrefersLowestIndexOnTies)
{
    Vector v(5);
    v << 1.0, 3.0, 2.0, 3.0, 3.0;
    EXPECT_EQ(argmax_first(v), 1);
}

TEST(Penalization, EmptyExclusionAcceptsEverything)
{
    std::mt19937_64 a(1), b(1);
    const auto t = penalized_target_sample(2, ExclusionSet{{}, 0.1}, 100, a);
    std::uniform_real_distribution<double> u;
    for (Eigen::Index i = 0; i < 100; ++i) {
        const double x = u(b), y = u(b);
        EXPECT_EQ(t.theta(i, 0), x);
        EXPECT_EQ(t.theta(i, 1), y);
    }
}

TEST(Penalization, OneDimensionalBallIsEmpty)
{
    std::mt19937_64 rng(2);
    Vector c(1);
    c << 0.53;
    const auto t = penalized_target_sample(1, ExclusionSet{{c}, 0.1}, 100000, rng);
    for (Eigen::Index i = 0; i < t.size(); ++i) EXPECT_FALSE(t.theta(i, 0) > 0.43 && t.theta(i, 0) < 0.63);
}

TEST(Penalization, CoveredDomainRaises)
{
    std::vector<Vector> centers;
    for (int i = 0; i < 10; ++i) centers.push_back(Vector::Constant(1, 0.05 + 0.1 * i));
    std::mt19937_64 rng(3);
    EXPECT_THROW(penalized_target_sample(1, ExclusionSet{centers, 0.1}, 10, rng), DomainCoveredError);
}

TEST(Dataset, StandardizesNegatedCostAndNormalizesTheta)
{
    const auto obj = bowl_2d();
    EvaluationDataset data(obj.domain);
    Vector a(2), b(2);
    a << -1.0, 10.0;
    b << 1.0, 20.0;
    data.append(a, 1.0);
    data.append(b, 3.0);
    const auto s = data.standardization();
    EXPECT_EQ(s.mean, -2.0);
    EXPECT_EQ(s.scale, 1.0);
    const auto ctx = data.context_set();
    EXPECT_EQ(ctx.theta(0, 0), 0.0);
    EXPECT_EQ(ctx.theta(1, 1), 1.0);
    EXPECT_EQ(ctx.values(0), 1.0);   // lower cost -> higher f
    EXPECT_EQ(ctx.values(1), -1.0);
    EXPECT_EQ(s.to_cost(ctx.values(1)), 3.0);
}

TEST(Dataset, RejectsPointsOutsideTheDomainAndNonFiniteCosts)
{
    EvaluationDataset data(bowl_2d().domain);
    Vector out(2);
    out << 0.0, 25.0;
    EXPECT_THROW(data.append(out, 1.0), PreconditionError);
    Vector in(2);
    in << 0.0, 15.0;
    EXPECT_THROW(data.append(in, std::nan("")), PreconditionError);
    data.append(in, 2.0);
    EXPECT_EQ(data.standardization().scale, 1.0);
}

TEST(SelectBatch, CandidatesAreSeparatedByDelta)
{
    const auto obj = bowl_2d();
    auto cfg = tiny_config();
    cfg.batch_size = 6;
    cfg.delta = 0.2;
    const auto data = seeded_dataset(obj, 20, 1);
    anp::AnpDims dims = cfg.surrogate.dims;
    dims.input_dim = 2;
    anp::AnpModel model(dims, 4);
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const auto plan = select_batch(model, data, cfg, rng);
        ASSERT_EQ(plan.candidates.size(), 6u);
        for (std::size_t i = 0; i < plan.candidates.size(); ++i) {
            EXPECT_TRUE(obj.domain.contains(plan.candidates[i].theta));
            EXPECT_EQ(plan.candidates[i].latent_draw, i);
            EXPECT_EQ(plan.candidates[i].exclusion.centers.size(), i);
            for (std::size_t j = 0; j < i; ++j)
                EXPECT_GE((plan.candidates[i].unit - plan.candidates[j].unit).norm(), cfg.delta);
        }
    }
}

TEST(SelectBatch, SingleCandidateBatch)
{
    const auto obj = bowl_2d();
    auto cfg = tiny_config();
    cfg.batch_size = 1;
    const auto data = seeded_dataset(obj, 10, 2);
    anp::AnpDims dims = cfg.surrogate.dims;
    dims.input_dim = 2;
    anp::AnpModel model(dims, 6);
    std::mt19937_64 rng(7);
    const auto plan = select_batch(model, data, cfg, rng);
    ASSERT_EQ(plan.candidates.size(), 1u);
    EXPECT_TRUE(plan.candidates[0].exclusion.centers.empty());
}

TEST(SelectBatch, PinnedLatentWithoutPenalizationCollapsesTheBatch)
{
    const auto obj = bowl_2d();
    auto cfg = tiny_config();
    cfg.batch_size = 5;
    cfg.no_target_penalization = true;
    const auto data = seeded_dataset(obj, 16, 3);
    anp::AnpDims dims = cfg.surrogate.dims;
    dims.input_dim = 2;
    anp::AnpModel model(dims, 8);
    std::mt19937_64 rng(9);
    const auto pinned = select_batch(model, data, cfg, rng, SelectionOptions{true});
    for (const auto& c : pinned.candidates) EXPECT_EQ(c.theta, pinned.candidates[0].theta);

    std::mt19937_64 rng2(9);
    const auto fresh = select_batch(model, data, cfg, rng2);
    bool any_different = false;
    for (const auto& c : fresh.candidates) any_different = any_different || c.theta != fresh.candidates[0].theta;
    EXPECT_TRUE(any_different);
}

TEST(SelectBatch, EmptyDatasetIsPreconditionError)
{
    const auto obj = bowl_2d();
    auto cfg = tiny_config();
    anp::AnpDims dims = cfg.surrogate.dims;
    dims.input_dim = 2;
    anp::AnpModel model(dims, 1);
    std::mt19937_64 rng(1);
    EXPECT_THROW(select_batch(model, EvaluationDataset(obj.domain), cfg, rng), PreconditionError);
}

TEST(Run, BookkeepingAndIncumbent)
{
    const auto obj = bowl_2d();
    const auto cfg = tiny_config();
    const auto h = run(obj, cfg);
    ASSERT_TRUE(h.completed) << h.error;
    EXPECT_EQ(h.entries.size(), cfg.initial_points + cfg.rounds * cfg.batch_size);
    EXPECT_EQ(h.batches.size(), cfg.rounds);
    EXPECT_EQ(h.training_runs, 1 + cfg.rounds);
    EXPECT_EQ(h.timings.size(), 1 + cfg.rounds);
    double best = INFINITY;
    for (std::size_t i = 0; i < h.entries.size(); ++i) {
        const auto& e = h.entries[i];
        EXPECT_EQ(e.index, i);
        EXPECT_EQ(e.round, i < cfg.initial_points ? 0 : 1 + (i - cfg.initial_points) / cfg.batch_size);
        best = std::min(best, e.cost);
        EXPECT_EQ(e.incumbent, best);
        EXPECT_TRUE(obj.domain.contains(e.theta));
    }
    EXPECT_EQ(h.best()->cost, h.incumbent());
    for (const auto& plan : h.batches)
        for (std::size_t i = 0; i < plan.candidates.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                EXPECT_GE((plan.candidates[i].unit - plan.candidates[j].unit).norm(), cfg.delta);
}

TEST(Run, BitReproducible)
{
    const auto obj = bowl_2d();
    const auto a = run(obj, tiny_config(9)), b = run(obj, tiny_config(9)), c = run(obj, tiny_config(10));
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].theta, b.entries[i].theta);
        EXPECT_EQ(a.entries[i].cost, b.entries[i].cost);
    }
    EXPECT_NE(a.entries.back().theta, c.entries.back().theta);
}

TEST(Run, NoRetrainTrainsOnce)
{
    auto cfg = tiny_config();
    cfg.no_retrain = true;
    const auto h = run(bowl_2d(), cfg);
    EXPECT_EQ(h.training_runs, 1u);
    EXPECT_EQ(h.entries.size(), cfg.initial_points + cfg.rounds * cfg.batch_size);
}

TEST(Run, FailedEvaluationsAreRecordedButNotLearnedFrom)
{
    auto obj = bowl_2d();
    obj.evaluate = [](const Vector& x, std::uint64_t) -> double {
        if (x(0) > 0.8) throw SimulationError("diverged", 1.0);
        return x(0) * x(0);
    };
    const auto cfg = tiny_config();
    const auto h = run(obj, cfg);
    ASSERT_TRUE(h.completed) << h.error;
    EXPECT_GT(h.failures(), 0u);
    for (const auto& e : h.entries) {
        EXPECT_EQ(e.ok, e.theta(0) <= 0.8);
        if (!e.ok) {
            EXPECT_TRUE(std::isnan(e.cost));
            EXPECT_EQ(e.error, "diverged");
        }
    }
}

TEST(Run, AbortsWhenAWholeBatchFails)
{
    auto obj = bowl_2d();
    auto calls = std::make_shared<int>(0);
    const auto cfg = tiny_config();
    obj.evaluate = [calls, n0 = cfg.initial_points](const Vector& x, std::uint64_t) -> double {
        if (static_cast<std::size_t>((*calls)++) >= n0) return std::nan("");
        return x(0) * x(0);
    };
    const auto h = run(obj, cfg);
    EXPECT_FALSE(h.completed);
    EXPECT_EQ(h.entries.size(), cfg.initial_points + cfg.batch_size);
    EXPECT_NE(h.error.find("round 1"), std::string::npos);
}

TEST(Run, SubSeedsDependOnEvaluationIndexOnly)
{
    auto obj = bowl_2d();
    auto seen = std::make_shared<std::vector<std::uint64_t>>();
    obj.evaluate = [seen](const Vector& x, std::uint64_t s) {
        seen->push_back(s);
        return x(0) * x(0);
    };
    const auto cfg = tiny_config(21);
    run(obj, cfg);
    ASSERT_EQ(seen->size(), cfg.initial_points + cfg.rounds * cfg.batch_size);
    for (std::size_t i = 0; i < seen->size(); ++i) EXPECT_EQ((*seen)[i], derive_seed(21, {seed_tag::evaluation, i}));
}
