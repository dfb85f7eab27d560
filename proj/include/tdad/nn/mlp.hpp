#pragma once

#include "tdad/nn/layers.hpp"

#include <vector>

namespace tdad::nn {

/// Dense autoencoder: x_hat = decoder(encoder(x)). The L1 penalty applies to
/// the weights of the first encoder layer only.
struct MlpAutoencoder {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;
    double l1_coeff = 1e-5;

    Index input_dim() const;
    Index output_dim() const;
    std::size_t layer_count() const { return encoder.size() + decoder.size(); }
    const DenseLayer& layer(std::size_t i) const;
    DenseLayer& layer(std::size_t i);

    std::vector<ParamBlock> parameters();
    MlpAutoencoder zeros_like() const;
    void validate() const;
};

struct MlpSpec {
    Index input_dim = 0;
    // Encoder hidden sizes; the decoder mirrors them back to input_dim.
    std::vector<Index> hidden{6, 6};
    // Hidden layers alternate starting from this activation (tanh -> relu -> tanh ...).
    Activation first_activation = Activation::tanh;
    Activation output_activation = Activation::identity;
    double l1_coeff = 1e-5;
};

MlpAutoencoder make_mlp(const MlpSpec& spec, Rng& rng);

struct MlpCache {
    std::vector<Mat> inputs;  // input of each layer
    std::vector<Mat> pre;     // pre-activation of each layer
};

// x: input_dim x batch. Returns the reconstruction (same shape).
Mat mlp_forward(const MlpAutoencoder& model, const Mat& x, MlpCache* cache = nullptr);
Vec mlp_forward(const MlpAutoencoder& model, const Vec& x);

// Gradient of (loss + l1_coeff * |W_first|_1) given dLoss/dOutput. The result
// has the model's shape; the L1 subgradient at w == 0 is 0.
MlpAutoencoder mlp_backward(const MlpAutoencoder& model, const MlpCache& cache, const Mat& output_grad);

double l1_penalty(const MlpAutoencoder& model);

} // namespace tdad::nn
