#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdad::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

enum class Activation { identity, tanh, relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

// Elementwise activation of a pre-activation matrix.
Mat activate(Activation a, const Mat& pre);
// Derivative of the activation evaluated at `pre`. ReLU'(0) is taken as 0.
Mat activation_derivative(Activation a, const Mat& pre);

/// Fully connected layer: y = act(W x + b), batch in columns.
struct DenseLayer {
    Mat weights;  // out x in
    Vec bias;     // out
    Activation activation = Activation::identity;

    Index in() const { return weights.cols(); }
    Index out() const { return weights.rows(); }
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and bias.
DenseLayer make_dense(Index in, Index out, Activation a, Rng& rng);

// Mutable view over one parameter tensor. Used by the optimizer, the
// gradient checker and the serializer, which all treat a model as a flat
// list of named blocks.
struct ParamBlock {
    std::string name;
    std::span<double> values;
};

inline std::span<double> span_of(Mat& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> span_of(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void fill_uniform(Mat& m, double limit, Rng& rng);
void fill_uniform(Vec& v, double limit, Rng& rng);

enum class Loss { mse, mae };

std::string_view to_string(Loss l);
Loss parse_loss(std::string_view name);

// Sum of the per-element loss of `output` against `target`, divided by
// `normalizer` (callers pass the element count for a plain mean).
double loss_value(Loss l, const Mat& output, const Mat& target, double normalizer);
// Gradient of loss_value with respect to output. MAE subgradient at 0 is 0.
Mat loss_gradient(Loss l, const Mat& output, const Mat& target, double normalizer);

} // namespace tdad::nn
