#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "anpbbo/bbo/domain.hpp"

namespace anpbbo::bbo {

/// Black-box cost to minimize. `evaluate` receives a physical-unit theta
/// inside `domain` and a per-evaluation sub-seed; it must be safe to call
/// concurrently. Throwing or returning a non-finite value marks the
/// evaluation as failed.
struct Objective {
    std::string name;
    SearchDomain domain;
    std::function<double(const Vector& theta, std::uint64_t subseed)> evaluate;
};

} // namespace anpbbo::bbo
