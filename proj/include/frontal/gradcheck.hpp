#pragma once

#include <cmath>
#include <functional>

#include "frontal/ops.hpp"
#include "frontal/tensor.hpp"

namespace frontal {

// A deterministic scalar-valued function of one tensor. When the tape is
// non-null the function must build its graph on it.
using ScalarFn = std::function<Tensor(const Tensor&, Tape*)>;

// Compares reverse-mode gradients against central finite differences.
// Returns max over coordinates of |autodiff - fd| / max(1, |fd|).
// Throws NumericError if the function produces a non-finite value.
inline double grad_check(const ScalarFn& fn, const Tensor& point, double eps = 1e-5) {
    Tensor x = point.clone();
    x.mark_parameter();

    Tape tape;
    Tensor loss = fn(x, &tape);
    if (loss.numel() != 1) throw ContractError("grad_check: fn must be scalar-valued");
    if (!std::isfinite(loss.item())) throw NumericError("grad_check: non-finite function value");
    tape.backward(loss);
    x.grad_mut(); // an input the function ignores has an all-zero gradient
    std::vector<double> autodiff(x.grad().begin(), x.grad().end());

    double max_rel = 0.0;
    auto xv = x.values_mut();
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double saved = xv[i];
        xv[i] = saved + eps;
        const double f_plus = fn(x, nullptr).item();
        xv[i] = saved - eps;
        const double f_minus = fn(x, nullptr).item();
        xv[i] = saved;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
            throw NumericError("grad_check: non-finite function value under perturbation");
        }
        const double fd = (f_plus - f_minus) / (2.0 * eps);
        const double rel = std::abs(autodiff[i] - fd) / std::max(1.0, std::abs(fd));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

} // namespace frontal
