#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vitalcast/tensor.hpp"

namespace vitalcast {

struct NamedParam {
    std::string name;
    TensorPtr tensor;
};

/// Outcome of comparing analytic gradients against central finite differences.
struct GradCheckReport {
    struct Entry {
        std::string name;
        double max_rel_err = 0.0;
    };
    std::vector<Entry> entries;
    double tolerance = 0.0;
    bool passed = true;

    double worst() const;
};

/// Checks the analytic gradients of `builder` against central finite
/// differences with the given step.
///
/// The builder must construct the scalar loss from the given tape and the
/// captured parameters, deterministically: it is run twice up front and a
/// mismatch raises a diagnostic error. Relative error uses a denominator of
/// max(|analytic|, |numeric|, 1e-4), so it degrades to an absolute check at
/// small gradient scale.
GradCheckReport grad_check(const std::function<TensorPtr(Tape&)>& builder,
                           const std::vector<NamedParam>& params, double tolerance,
                           double step = 1e-5);

} // namespace vitalcast
