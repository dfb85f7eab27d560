#include "tdad/nn/mlp.hpp"

#include "tdad/error.hpp"

namespace tdad::nn {

Index MlpAutoencoder::input_dim() const {
    return encoder.empty() ? (decoder.empty() ? 0 : decoder.front().in()) : encoder.front().in();
}

Index MlpAutoencoder::output_dim() const {
    return decoder.empty() ? (encoder.empty() ? 0 : encoder.back().out()) : decoder.back().out();
}

const DenseLayer& MlpAutoencoder::layer(std::size_t i) const {
    return i < encoder.size() ? encoder[i] : decoder.at(i - encoder.size());
}

DenseLayer& MlpAutoencoder::layer(std::size_t i) {
    return i < encoder.size() ? encoder[i] : decoder.at(i - encoder.size());
}

std::vector<ParamBlock> MlpAutoencoder::parameters() {
    std::vector<ParamBlock> blocks;
    for (std::size_t i = 0; i < encoder.size(); ++i) {
        blocks.push_back({"encoder." + std::to_string(i) + ".weights", span_of(encoder[i].weights)});
        blocks.push_back({"encoder." + std::to_string(i) + ".bias", span_of(encoder[i].bias)});
    }
    for (std::size_t i = 0; i < decoder.size(); ++i) {
        blocks.push_back({"decoder." + std::to_string(i) + ".weights", span_of(decoder[i].weights)});
        blocks.push_back({"decoder." + std::to_string(i) + ".bias", span_of(decoder[i].bias)});
    }
    return blocks;
}

MlpAutoencoder MlpAutoencoder::zeros_like() const {
    MlpAutoencoder z = *this;
    for (std::size_t i = 0; i < z.layer_count(); ++i) {
        z.layer(i).weights.setZero();
        z.layer(i).bias.setZero();
    }
    return z;
}

void MlpAutoencoder::validate() const {
    if (layer_count() == 0) {
        throw ModelError("autoencoder has no layers");
    }
    for (std::size_t i = 0; i < layer_count(); ++i) {
        const auto& l = layer(i);
        if (l.bias.size() != l.out()) {
            throw ModelError("layer " + std::to_string(i) + ": bias size does not match weights");
        }
        if (i > 0 && layer(i - 1).out() != l.in()) {
            throw ModelError("layer " + std::to_string(i) + ": input size does not match previous layer");
        }
        if (!l.weights.allFinite() || !l.bias.allFinite()) {
            throw ModelError("layer " + std::to_string(i) + ": non-finite parameters");
        }
    }
    if (input_dim() != output_dim()) {
        throw ModelError("autoencoder input and output dimensions differ");
    }
    if (l1_coeff < 0.0) {
        throw ModelError("l1_coeff must be non-negative");
    }
}

MlpAutoencoder make_mlp(const MlpSpec& spec, Rng& rng) {
    if (spec.input_dim < 1) {
        throw ModelError("autoencoder input dimension must be positive");
    }
    std::vector<Index> dims{spec.input_dim};
    dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
    if (!spec.hidden.empty()) {
        for (auto it = spec.hidden.rbegin() + 1; it < spec.hidden.rend(); ++it) dims.push_back(*it);
    }
    dims.push_back(spec.input_dim);

    const std::size_t n_layers = dims.size() - 1;
    const Activation other =
        spec.first_activation == Activation::tanh ? Activation::relu : Activation::tanh;
    MlpAutoencoder model;
    model.l1_coeff = spec.l1_coeff;
    for (std::size_t i = 0; i < n_layers; ++i) {
        Activation a = (i % 2 == 0) ? spec.first_activation : other;
        if (i + 1 == n_layers) a = spec.output_activation;
        DenseLayer layer = make_dense(dims[i], dims[i + 1], a, rng);
        if (i < spec.hidden.size()) {
            model.encoder.push_back(std::move(layer));
        } else {
            model.decoder.push_back(std::move(layer));
        }
    }
    return model;
}

Mat mlp_forward(const MlpAutoencoder& model, const Mat& x, MlpCache* cache) {
    if (x.rows() != model.input_dim()) {
        throw ModelError("autoencoder input has " + std::to_string(x.rows()) + " features, expected " +
                         std::to_string(model.input_dim()));
    }
    if (cache != nullptr) {
        cache->inputs.clear();
        cache->pre.clear();
    }
    Mat h = x;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const auto& l = model.layer(i);
        Mat pre = l.weights * h;
        pre.colwise() += l.bias;
        Mat out = activate(l.activation, pre);
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(h));
            cache->pre.push_back(std::move(pre));
        }
        h = std::move(out);
    }
    return h;
}

Vec mlp_forward(const MlpAutoencoder& model, const Vec& x) {
    return mlp_forward(model, Mat(x)).col(0);
}

MlpAutoencoder mlp_backward(const MlpAutoencoder& model, const MlpCache& cache, const Mat& output_grad) {
    const std::size_t n = model.layer_count();
    if (cache.pre.size() != n || cache.inputs.size() != n) {
        throw ModelError("stale forward cache: layer count mismatch");
    }
    if (output_grad.rows() != model.output_dim() || output_grad.cols() != cache.pre.back().cols()) {
        throw ModelError("stale forward cache: gradient shape does not match cached batch");
    }
    MlpAutoencoder grads = model.zeros_like();
    Mat delta = output_grad;
    for (std::size_t k = n; k-- > 0;) {
        const auto& l = model.layer(k);
        if (cache.pre[k].rows() != l.out() || cache.inputs[k].rows() != l.in()) {
            throw ModelError("stale forward cache: shape mismatch at layer " + std::to_string(k));
        }
        const Mat dpre = delta.cwiseProduct(activation_derivative(l.activation, cache.pre[k]));
        auto& g = grads.layer(k);
        g.weights.noalias() = dpre * cache.inputs[k].transpose();
        g.bias = dpre.rowwise().sum();
        if (k > 0) delta.noalias() = l.weights.transpose() * dpre;
    }
    if (model.l1_coeff > 0.0) {
        auto& g0 = grads.layer(0).weights;
        g0.array() += model.l1_coeff * model.layer(0).weights.array().sign();
    }
    return grads;
}

double l1_penalty(const MlpAutoencoder& model) {
    return model.l1_coeff * model.layer(0).weights.cwiseAbs().sum();
}

} // namespace tdad::nn
