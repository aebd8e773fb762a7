#include "volsr/tensor/grad_check.hpp"

#include "volsr/util/errors.hpp"

#include <algorithm>
#include <cmath>

namespace volsr::nn {

GradCheckResult grad_check(const std::function<Var<double>()>& loss_fn, const std::vector<Var<double>>& targets,
                           std::size_t max_elements_per_target) {
    for (auto t : targets) {
        if (!t.requires_grad()) throw ContractError("grad_check: target does not require grad");
        t.zero_grad();
    }
    backward(loss_fn());
    std::vector<Tensor<double>> analytic;
    analytic.reserve(targets.size());
    for (const auto& t : targets) analytic.push_back(t.grad());

    auto eval = [&] {
        NoGradGuard guard;
        return loss_fn().value().item();
    };

    const double f0 = eval();
    GradCheckResult result;
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        Var<double> target = targets[ti];
        Tensor<double>& theta = target.mutable_value();
        const std::size_t n = theta.size();
        const std::size_t step = (max_elements_per_target && n > max_elements_per_target)
                                     ? (n + max_elements_per_target - 1) / max_elements_per_target
                                     : 1;
        for (std::size_t i = 0; i < n; i += step) {
            const double orig = theta[i];
            double h = 1e-5 * std::max(1.0, std::abs(orig));
            double numeric = 0.0;
            bool smooth = false;
            for (int refine = 0; refine < 2 && !smooth; ++refine, h *= 0.1) {
                theta[i] = orig + h;
                const double plus = eval();
                theta[i] = orig - h;
                const double minus = eval();
                theta[i] = orig;
                const double fwd = (plus - f0) / h, bwd = (f0 - minus) / h;
                numeric = (plus - minus) / (2.0 * h);
                smooth = std::abs(fwd - bwd) <= 2e-4 * std::max(std::abs(fwd), std::abs(bwd)) + 1e-6;
            }
            if (!smooth) {
                ++result.nonsmooth;
                continue;
            }
            const double a = analytic[ti][i];
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            ++result.checked;
            if (err > result.max_relative_error) {
                result.max_relative_error = err;
                result.worst = std::to_string(ti) + "[" + std::to_string(i) + "]";
            }
        }
    }
    return result;
}

} // namespace volsr::nn
