#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vitalcast {

/// Result of the full gradient-check sweep: every differentiable operation
/// against central finite differences at 1e-4 relative tolerance, then both
/// attention-wrapped forecasters end to end at 1e-3.
struct GradSuiteResult {
    struct Item {
        std::string name;
        double worst = 0.0;
        double tolerance = 0.0;
        bool passed = true;
    };
    std::vector<Item> items;
    bool passed = true;
};

GradSuiteResult run_gradient_suite(std::uint64_t seed, std::size_t trials = 20);

} // namespace vitalcast
