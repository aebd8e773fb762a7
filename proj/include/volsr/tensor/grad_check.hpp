#pragma once

#include "volsr/tensor/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace volsr::nn {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst;  ///< "<target index>[<element>]" of the worst entry
    std::size_t checked = 0;
    std::size_t nonsmooth = 0;  ///< elements left unchecked because a kink stays within the step

    bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

/// Central-difference check of d(loss)/d(target) for every element of every
/// target leaf. h = 1e-5 * max(1, |theta|); per-element error is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
///
/// When the forward and backward one-sided slopes disagree (a ReLU-style kink
/// inside the step) h shrinks tenfold once; elements still non-smooth
/// are counted in `nonsmooth` instead of compared.
///
/// `loss_fn` must rebuild the graph from the current leaf values on each call.
/// `max_elements_per_target` subsamples large tensors deterministically
/// (0 = check everything).
GradCheckResult grad_check(const std::function<Var<double>()>& loss_fn, const std::vector<Var<double>>& targets,
                           std::size_t max_elements_per_target = 0);

} // namespace volsr::nn
