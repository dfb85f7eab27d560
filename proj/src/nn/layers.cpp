#include "tdad/nn/layers.hpp"

#include "tdad/error.hpp"

#include <cmath>

namespace tdad::nn {

std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Mat activate(Activation a, const Mat& pre) {
    switch (a) {
    case Activation::identity: return pre;
    case Activation::tanh: return pre.array().tanh().matrix();
    case Activation::relu: return pre.array().max(0.0).matrix();
    }
    return pre;
}

Mat activation_derivative(Activation a, const Mat& pre) {
    switch (a) {
    case Activation::identity: return Mat::Ones(pre.rows(), pre.cols());
    case Activation::tanh: return (1.0 - pre.array().tanh().square()).matrix();
    case Activation::relu: return (pre.array() > 0.0).cast<double>().matrix();
    }
    return Mat::Ones(pre.rows(), pre.cols());
}

void fill_uniform(Mat& m, double limit, Rng& rng) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void fill_uniform(Vec& v, double limit, Rng& rng) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
}

DenseLayer make_dense(Index in, Index out, Activation a, Rng& rng) {
    DenseLayer layer{Mat(out, in), Vec(out), a};
    const double limit = 1.0 / std::sqrt(static_cast<double>(in));
    fill_uniform(layer.weights, limit, rng);
    fill_uniform(layer.bias, limit, rng);
    return layer;
}

std::string_view to_string(Loss l) { return l == Loss::mse ? "mse" : "mae"; }

Loss parse_loss(std::string_view name) {
    if (name == "mse") return Loss::mse;
    if (name == "mae") return Loss::mae;
    throw ConfigError("unknown loss '" + std::string(name) + "'");
}

double loss_value(Loss l, const Mat& output, const Mat& target, double normalizer) {
    const auto diff = (output - target).array();
    const double total = l == Loss::mse ? diff.square().sum() : diff.abs().sum();
    return total / normalizer;
}

Mat loss_gradient(Loss l, const Mat& output, const Mat& target, double normalizer) {
    const Mat diff = output - target;
    if (l == Loss::mse) {
        return (2.0 / normalizer) * diff;
    }
    return (diff.array().sign() / normalizer).matrix();
}

} // namespace tdad::nn
