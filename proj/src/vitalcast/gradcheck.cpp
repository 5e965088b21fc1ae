#include "vitalcast/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vitalcast {

double GradCheckReport::worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_err);
    return w;
}

GradCheckReport grad_check(const std::function<TensorPtr(Tape&)>& builder,
                           const std::vector<NamedParam>& params, double tolerance,
                           double step) {
    GradCheckReport report;
    report.tolerance = tolerance;

    auto eval = [&builder]() {
        Tape tape(false);
        TensorPtr loss = builder(tape);
        if (loss->numel() != 1) throw UsageError("grad_check: builder must return a scalar");
        return loss->data[0];
    };

    const double probe1 = eval();
    const double probe2 = eval();
    if (std::memcmp(&probe1, &probe2, sizeof(double)) != 0) {
        throw UsageError("grad_check: builder is not deterministic (two forward passes "
                         "disagree)");
    }

    if (params.empty()) return report; // nothing to check, trivially passes

    // Analytic gradients.
    for (const auto& p : params) p.tensor->clear_grad();
    {
        Tape tape(true);
        TensorPtr loss = builder(tape);
        tape.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        if (p.tensor->grad.empty()) {
            analytic.emplace_back(p.tensor->numel(), 0.0); // disconnected parameter
        } else {
            analytic.push_back(p.tensor->grad);
        }
        p.tensor->clear_grad();
    }

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& t = *params[pi].tensor;
        GradCheckReport::Entry entry;
        entry.name = params[pi].name;
        for (std::size_t j = 0; j < t.numel(); ++j) {
            const double saved = t.data[j];
            t.data[j] = saved + step;
            const double up = eval();
            t.data[j] = saved - step;
            const double down = eval();
            t.data[j] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double an = analytic[pi][j];
            const double denom = std::max({std::fabs(an), std::fabs(fd), 1e-4});
            entry.max_rel_err = std::max(entry.max_rel_err, std::fabs(an - fd) / denom);
        }
        if (entry.max_rel_err > tolerance) report.passed = false;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace vitalcast
