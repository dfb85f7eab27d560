#pragma once

#include "tdad/nn/lstm.hpp"
#include "tdad/nn/mlp.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tdad::nn {

enum class ModelKind { mlp, lstm, linear };

struct GradCheckOptions {
    double step = 1e-5;
    // LSTM only: stacked layers in each of encoder and decoder.
    Index lstm_layers = 2;
};

struct GradCheckReport {
    std::string model_kind;
    std::uint64_t seed = 0;
    // max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-12)
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t parameters_checked = 0;
};

double relative_error(double analytic, double numeric);

// Compares `analytic` against central differences of `loss` taken by
// perturbing each entry of `params` in place. The loss is evaluated in
// extended precision so the quotient resolves small gradient entries.
GradCheckReport compare_gradients(const std::vector<ParamBlock>& params, const std::vector<ParamBlock>& analytic,
                                  const std::function<long double()>& loss, double step);

// Builds a small random model of the requested kind from `seed` and checks
// its hand-derived gradients (double precision, dropout disabled).
GradCheckReport grad_check(ModelKind kind, std::uint64_t seed, const GradCheckOptions& options = {});

GradCheckReport grad_check_mlp(const MlpSpec& spec, Index batch, std::uint64_t seed, double step = 1e-5);
GradCheckReport grad_check_lstm(const LstmSpec& spec, Index batch, Loss loss, std::uint64_t seed,
                                double step = 1e-5);

} // namespace tdad::nn
