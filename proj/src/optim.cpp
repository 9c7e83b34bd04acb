#include "zs3/optim.hpp"

#include "zs3/errors.hpp"

#include <cmath>
#include <cstdio>

namespace zs3 {

OptimizerState OptimizerState::sgd(double momentum, double weight_decay) {
    OptimizerState st;
    st.mode = OptMode::sgd_momentum;
    st.momentum = momentum;
    st.weight_decay = weight_decay;
    return st;
}

OptimizerState OptimizerState::adam(double beta1, double beta2, double epsilon, double weight_decay) {
    OptimizerState st;
    st.mode = OptMode::adam;
    st.momentum = beta1;
    st.beta2 = beta2;
    st.epsilon = epsilon;
    st.weight_decay = weight_decay;
    return st;
}

void optimizer_step(const std::vector<Parameter*>& params, OptimizerState& state, double lr) {
    if (lr <= 0.0) throw ConfigError("optimizer_step: learning rate must be positive");
    if (state.moment1.empty()) {
        for (const Parameter* p : params) state.moment1.emplace_back(Matrix::zeros(p->value.rows, p->value.cols));
        if (state.mode == OptMode::adam)
            for (const Parameter* p : params) state.moment2.emplace_back(Matrix::zeros(p->value.rows, p->value.cols));
    }
    if (state.moment1.size() != params.size())
        throw ConfigError("optimizer_step: parameter list does not match optimizer state");
    state.step_count += 1;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        if (!p.grad.same_shape(p.value)) throw DimensionError("optimizer_step: grad/value shape mismatch");
        Matrix& m1 = state.moment1[pi];
        if (state.mode == OptMode::sgd_momentum) {
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double g = p.grad.data[i] + state.weight_decay * p.value.data[i];
                m1.data[i] = state.momentum * m1.data[i] + g;
                p.value.data[i] -= lr * m1.data[i];
            }
        } else {
            Matrix& m2 = state.moment2[pi];
            const double b1 = state.momentum;
            const double b2 = state.beta2;
            const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
            const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double g = p.grad.data[i] + state.weight_decay * p.value.data[i];
                m1.data[i] = b1 * m1.data[i] + (1.0 - b1) * g;
                m2.data[i] = b2 * m2.data[i] + (1.0 - b2) * g * g;
                const double mhat = m1.data[i] / bias1;
                const double vhat = m2.data[i] / bias2;
                p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
            }
        }
        check_finite(p.value, p.name.empty() ? "parameter" : p.name.c_str());
    }
}

double poly_lr(const PolyLrSchedule& schedule, std::size_t iter) {
    if (iter > schedule.max_iterations) {
        static bool warned = false;
        if (!warned) {
            std::fprintf(stderr, "warning: poly_lr iteration %zu past max %zu, clamping rate to 0\n", iter,
                         schedule.max_iterations);
            warned = true;
        }
        return 0.0;
    }
    const double frac = 1.0 - static_cast<double>(iter) / static_cast<double>(schedule.max_iterations);
    return schedule.base_rate * std::pow(frac, schedule.power);
}

double gradient_check(const std::function<double()>& loss_fn, const std::vector<Parameter*>& params,
                      double epsilon) {
    for (Parameter* p : params) p->zero_grad();
    const double base_loss = loss_fn();
    if (!std::isfinite(base_loss)) throw NumericError("gradient_check: non-finite loss");
    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (Parameter* p : params) analytic.push_back(p->grad);

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double orig = p.value.data[i];
            p.value.data[i] = orig + epsilon;
            const double plus = loss_fn();
            p.value.data[i] = orig - epsilon;
            const double minus = loss_fn();
            p.value.data[i] = orig;
            if (!std::isfinite(plus) || !std::isfinite(minus))
                throw NumericError("gradient_check: non-finite loss during perturbation");
            const double numeric = (plus - minus) / (2.0 * epsilon);
            const double ana = analytic[pi].data[i];
            const double rel = std::abs(numeric - ana) / std::max(1e-8, std::abs(numeric) + std::abs(ana));
            worst = std::max(worst, rel);
        }
    }
    // leave the analytic grads in place
    for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
    return worst;
}

} // namespace zs3
