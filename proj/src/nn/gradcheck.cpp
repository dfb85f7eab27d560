#include "tdad/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace tdad::nn {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport compare_gradients(const std::vector<ParamBlock>& params, const std::vector<ParamBlock>& analytic,
                                  const std::function<long double()>& loss, double step) {
    GradCheckReport report;
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto values = params[b].values;
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double saved = values[k];
            const double hi = saved + step;
            const double lo = saved - step;
            values[k] = hi;
            const long double up = loss();
            values[k] = lo;
            const long double down = loss();
            values[k] = saved;
            const auto numeric = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
            const double err = relative_error(analytic[b].values[k], numeric);
            if (err > report.max_relative_error || report.worst_parameter.empty()) {
                report.max_relative_error = std::max(report.max_relative_error, err);
                report.worst_parameter = params[b].name + "[" + std::to_string(k) + "]";
            }
            ++report.parameters_checked;
        }
    }
    return report;
}

namespace {

// Reference forward passes in extended precision. The difference quotient of a
// double-precision loss bottoms out at ulp(loss) / (2 * step), which swamps
// gradient entries of order 1e-9; these mirrors keep the quotient accurate.
using XMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using XVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

XMat widen(const Mat& m) { return m.cast<long double>(); }

XMat x_activate(Activation a, const XMat& z) {
    switch (a) {
    case Activation::identity: return z;
    case Activation::tanh: return z.unaryExpr([](long double v) { return std::tanh(v); });
    case Activation::relu: return z.unaryExpr([](long double v) { return v > 0.0L ? v : 0.0L; });
    }
    return z;
}

XMat x_sigmoid(const XMat& z) {
    return z.unaryExpr([](long double v) { return 1.0L / (1.0L + std::exp(-v)); });
}

XMat x_tanh(const XMat& z) {
    return z.unaryExpr([](long double v) { return std::tanh(v); });
}

long double x_loss(Loss kind, const XMat& out, const Mat& target, double normalizer) {
    const XMat diff = out - widen(target);
    const long double sum = kind == Loss::mse ? diff.array().square().sum() : diff.array().abs().sum();
    return sum / static_cast<long double>(normalizer);
}

XMat x_mlp_forward(const MlpAutoencoder& model, const Mat& x) {
    XMat h = widen(x);
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const auto& l = model.layer(i);
        XMat pre = widen(l.weights) * h;
        pre.colwise() += l.bias.cast<long double>();
        h = x_activate(l.activation, pre);
    }
    return h;
}

struct XState {
    std::vector<XMat> h;
    std::vector<XMat> c;
};

XMat x_cell(const LstmCell& cell, const XMat& x, XMat& h, XMat& c) {
    const Index H = cell.hidden();
    XMat z = widen(cell.input_weights) * x + widen(cell.recurrent_weights) * h;
    z.colwise() += cell.bias.cast<long double>();
    const XMat i = x_sigmoid(z.topRows(H));
    const XMat f = x_sigmoid(z.middleRows(H, H));
    const XMat g = x_tanh(z.middleRows(2 * H, H));
    const XMat o = x_sigmoid(z.bottomRows(H));
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    h = o.cwiseProduct(x_tanh(c));
    return h;
}

// Inference-mode encoder-decoder reconstruction, output aligned with input.
std::vector<XMat> x_lstm_forward(const LstmEncoderDecoder& model, const Sequence& input) {
    const std::size_t L = model.layers();
    const Index H = model.hidden();
    const Index B = input.front().cols();
    const std::size_t w = input.size();
    XState st{std::vector<XMat>(L, XMat::Zero(H, B)), std::vector<XMat>(L, XMat::Zero(H, B))};
    for (std::size_t t = 0; t < w; ++t) {
        XMat in = widen(input[t]);
        for (std::size_t l = 0; l < L; ++l) in = x_cell(model.encoder[l], in, st.h[l], st.c[l]);
    }
    std::vector<XMat> out(w);
    XMat prev;
    for (std::size_t s = 0; s < w; ++s) {
        if (s > 0) {
            XMat in = prev;
            for (std::size_t l = 0; l < L; ++l) in = x_cell(model.decoder[l], in, st.h[l], st.c[l]);
        }
        XMat y = widen(model.projection.weights) * st.h[L - 1];
        y.colwise() += model.projection.bias.cast<long double>();
        out[model.reverse_decode ? w - 1 - s : s] = y;
        prev = std::move(y);
    }
    return out;
}

Mat random_inputs(Index rows, Index cols, Rng& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Mat m(rows, cols);
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = dist(rng);
    return m;
}

} // namespace

GradCheckReport grad_check_mlp(const MlpSpec& spec, Index batch, std::uint64_t seed, double step) {
    Rng rng(seed);
    MlpAutoencoder model = make_mlp(spec, rng);
    const Mat x = random_inputs(spec.input_dim, batch, rng);
    const double n = static_cast<double>(x.size());

    MlpCache cache;
    const Mat out = mlp_forward(model, x, &cache);
    MlpAutoencoder grads = mlp_backward(model, cache, loss_gradient(Loss::mse, out, x, n));
    auto loss = [&] {
        const long double l1 = static_cast<long double>(model.l1_coeff) *
                               widen(model.layer(0).weights).cwiseAbs().sum();
        return x_loss(Loss::mse, x_mlp_forward(model, x), x, n) + l1;
    };
    GradCheckReport r = compare_gradients(model.parameters(), grads.parameters(), loss, step);
    r.model_kind = "mlp";
    r.seed = seed;
    return r;
}

GradCheckReport grad_check_lstm(const LstmSpec& spec, Index batch, Loss loss_kind, std::uint64_t seed,
                                double step) {
    Rng rng(seed);
    LstmEncoderDecoder model = make_lstm(spec, rng);
    std::vector<Mat> windows;
    for (Index b = 0; b < batch; ++b) windows.push_back(random_inputs(spec.window, spec.input_dim, rng));
    std::vector<const Mat*> ptrs;
    for (const auto& w : windows) ptrs.push_back(&w);
    const Sequence input = to_batch(ptrs);
    const double n = static_cast<double>(spec.window * spec.input_dim * batch);

    auto total_loss = [&] {
        const std::vector<XMat> out = x_lstm_forward(model, input);
        long double l = 0.0L;
        for (std::size_t t = 0; t < out.size(); ++t) l += x_loss(loss_kind, out[t], input[t], n);
        return l;
    };

    LstmCache cache;
    const Sequence out = lstm_forward(model, input, Mode::inference, nullptr, &cache);
    Sequence g(out.size());
    for (std::size_t t = 0; t < out.size(); ++t) g[t] = loss_gradient(loss_kind, out[t], input[t], n);
    LstmEncoderDecoder grads = lstm_backward(model, cache, g);
    GradCheckReport r = compare_gradients(model.parameters(), grads.parameters(), total_loss, step);
    r.model_kind = "lstm";
    r.seed = seed;
    return r;
}

GradCheckReport grad_check(ModelKind kind, std::uint64_t seed, const GradCheckOptions& options) {
    switch (kind) {
    case ModelKind::mlp: {
        MlpSpec spec;
        spec.input_dim = 7;
        spec.hidden = {6, 6};
        spec.l1_coeff = 1e-3;
        return grad_check_mlp(spec, 5, seed, options.step);
    }
    case ModelKind::lstm: {
        LstmSpec spec;
        spec.input_dim = 3;
        spec.hidden = 4;
        spec.layers = options.lstm_layers;
        spec.window = 6;
        spec.dropout = 0.2;
        return grad_check_lstm(spec, 3, Loss::mse, seed, options.step);
    }
    case ModelKind::linear: {
        Rng rng(seed);
        MlpAutoencoder model;
        model.l1_coeff = 0.0;
        DenseLayer layer = make_dense(1, 1, Activation::identity, rng);
        layer.bias.setZero();
        model.encoder.push_back(layer);
        const Mat x = random_inputs(1, 4, rng);
        MlpCache cache;
        const Mat out = mlp_forward(model, x, &cache);
        MlpAutoencoder grads = mlp_backward(model, cache, loss_gradient(Loss::mse, out, x, 4.0));
        // Only the weight is checked; the bias stays at zero.
        std::vector<ParamBlock> params = model.parameters();
        std::vector<ParamBlock> analytic = grads.parameters();
        params.resize(1);
        analytic.resize(1);
        auto loss = [&] { return x_loss(Loss::mse, x_mlp_forward(model, x), x, 4.0); };
        GradCheckReport r = compare_gradients(params, analytic, loss, options.step);
        r.model_kind = "linear";
        r.seed = seed;
        return r;
    }
    }
    return {};
}

} // namespace tdad::nn
