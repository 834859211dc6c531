#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "anpbbo/anp/model.hpp"
#include "anpbbo/bbo/domain.hpp"

namespace anpbbo::bbo {

/// Open Euclidean balls of radius `radius` in normalized coordinates.
struct ExclusionSet {
    std::vector<Vector> centers;
    double radius = 0.01;

    bool excludes(const Eigen::Ref<const Vector>& unit_point) const
    {
        const double r2 = radius * radius;
        for (const auto& c : centers)
            if ((unit_point - c).squaredNorm() < r2) return true;
        return false;
    }
};

inline constexpr std::uint64_t kPenalizationProposalBudget = 1'000'000;
inline constexpr double kPenalizationMinAcceptance = 0.01;

/**
 * `count` points uniform on the unit box minus the exclusion balls, by
 * rejection. Fails with DomainCoveredError once the proposal budget is spent
 * while fewer than 1% of proposals have been accepted.
 */
template <typename Rng>
anp::TargetSet penalized_target_sample(Eigen::Index dim, const ExclusionSet& exclusion, std::size_t count, Rng& rng)
{
    if (count < 1) throw PreconditionError("penalized_target_sample: count must be >= 1");
    if (dim < 1) throw PreconditionError("penalized_target_sample: dimension must be >= 1");
    if (!exclusion.centers.empty() && !(exclusion.radius > 0.0))
        throw PreconditionError("penalized_target_sample: radius must be > 0");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    anp::TargetSet out;
    out.theta.resize(static_cast<Eigen::Index>(count), dim);
    Vector p(dim);
    std::uint64_t proposals = 0;
    std::size_t accepted = 0;
    while (accepted < count) {
        for (Eigen::Index d = 0; d < dim; ++d) p(d) = u(rng);
        ++proposals;
        if (!exclusion.excludes(p)) out.theta.row(static_cast<Eigen::Index>(accepted++)) = p.transpose();
        if (proposals >= kPenalizationProposalBudget &&
            static_cast<double>(accepted) < kPenalizationMinAcceptance * static_cast<double>(proposals))
            throw DomainCoveredError("exclusion balls cover the search domain: " + std::to_string(accepted) +
                                     " of " + std::to_string(proposals) + " proposals accepted");
    }
    return out;
}

template <typename Rng>
anp::TargetSet penalized_target_sample(const SearchDomain& domain, const ExclusionSet& exclusion, std::size_t count,
                                       Rng& rng)
{
    return penalized_target_sample(domain.dim(), exclusion, count, rng);
}

} // namespace anpbbo::bbo
