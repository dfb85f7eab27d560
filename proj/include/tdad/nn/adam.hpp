#pragma once

#include "tdad/nn/layers.hpp"

#include <vector>

namespace tdad::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators for a fixed list of parameter blocks.
class AdamState {
public:
    AdamState() = default;
    AdamState(const std::vector<ParamBlock>& params, AdamConfig config);

    // One bias-corrected Adam update. Throws TrainingError naming the block
    // if any gradient is non-finite; parameters are untouched in that case.
    void step(const std::vector<ParamBlock>& params, const std::vector<ParamBlock>& grads);

    long steps() const { return steps_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long steps_ = 0;
};

} // namespace tdad::nn
