#pragma once

#include "zs3/matrix.hpp"
#include "zs3/nn.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace zs3 {

enum class OptMode { sgd_momentum, adam };

/// Per-parameter optimizer buffers. Buffers are allocated lazily to match
/// the parameter list handed to the first step.
struct OptimizerState {
    OptMode mode = OptMode::sgd_momentum;
    double momentum = 0.9; // beta1 in adam mode
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    std::vector<Matrix> moment1; // sgd velocity / adam first moment
    std::vector<Matrix> moment2; // adam second moment
    std::size_t step_count = 0;

    static OptimizerState sgd(double momentum, double weight_decay);
    static OptimizerState adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8,
                               double weight_decay = 0.0);
};

/// One update step at the given learning rate. Gradients are not cleared.
void optimizer_step(const std::vector<Parameter*>& params, OptimizerState& state, double lr);

/// Polynomial decay: rate(i) = base * (1 - i/max_iterations)^power.
struct PolyLrSchedule {
    double base_rate = 7e-3;
    std::size_t max_iterations = 1;
    double power = 0.9;
};

/// Past max_iterations the rate clamps to 0 (with a one-time warning on stderr).
double poly_lr(const PolyLrSchedule& schedule, std::size_t iter);

/// Central-difference check of the analytic gradients produced by `loss_fn`.
///
/// `loss_fn` must run forward and backward, accumulating into each
/// parameter's grad, and return the loss; it must be deterministic (freeze
/// any dropout masks). Returns the worst relative error over all entries.
double gradient_check(const std::function<double()>& loss_fn, const std::vector<Parameter*>& params,
                      double epsilon);

} // namespace zs3
