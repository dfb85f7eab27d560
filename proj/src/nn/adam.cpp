#include "tdad/nn/adam.hpp"

#include "tdad/error.hpp"

#include <cmath>

namespace tdad::nn {

AdamState::AdamState(const std::vector<ParamBlock>& params, AdamConfig config) : config_(config) {
    for (const auto& p : params) {
        m_.emplace_back(p.values.size(), 0.0);
        v_.emplace_back(p.values.size(), 0.0);
    }
}

void AdamState::step(const std::vector<ParamBlock>& params, const std::vector<ParamBlock>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw TrainingError("optimizer state does not match the parameter list");
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].values.size() != m_[b].size() || grads[b].values.size() != m_[b].size()) {
            throw TrainingError("shape mismatch in parameter block " + params[b].name);
        }
        for (double g : grads[b].values) {
            if (!std::isfinite(g)) {
                throw TrainingError("non-finite gradient in parameter block " + params[b].name);
            }
        }
    }

    ++steps_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto& m = m_[b];
        auto& v = v_[b];
        const auto g = grads[b].values;
        const auto x = params[b].values;
        for (std::size_t k = 0; k < x.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double m_hat = m[k] / corr1;
            const double v_hat = v[k] / corr2;
            x[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

} // namespace tdad::nn
