#include "tdad/nn/lstm.hpp"

#include "tdad/error.hpp"

#include <cmath>

namespace tdad::nn {

namespace {

// tanh via the logistic function keeps both gate nonlinearities on the
// vectorized exp path.
inline Mat sigmoid(const Mat& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

inline Mat tanh_of(const Mat& z) {
    return (2.0 * (1.0 + (-2.0 * z.array()).exp()).inverse() - 1.0).matrix();
}

struct StepOut {
    Mat h;
    Mat c;
};

StepOut cell_forward(const LstmCell& cell, const Mat& x, const Mat& h_prev, const Mat& c_prev,
                     LstmStepCache* cache) {
    const Index H = cell.hidden();
    const Index B = x.cols();
    Mat z(4 * H, B);
    z.noalias() = cell.input_weights * x;
    z.noalias() += cell.recurrent_weights * h_prev;
    z.colwise() += cell.bias;

    Mat gates(4 * H, B);
    gates.topRows(2 * H) = sigmoid(z.topRows(2 * H));
    gates.middleRows(2 * H, H) = tanh_of(z.middleRows(2 * H, H));
    gates.bottomRows(H) = sigmoid(z.bottomRows(H));

    StepOut out;
    out.c = gates.middleRows(H, H).cwiseProduct(c_prev) +
            gates.topRows(H).cwiseProduct(gates.middleRows(2 * H, H));
    Mat tc = tanh_of(out.c);
    out.h = gates.bottomRows(H).cwiseProduct(tc);
    if (cache != nullptr) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->c_prev = c_prev;
        cache->gates = std::move(gates);
        cache->c = out.c;
        cache->tanh_c = std::move(tc);
    }
    return out;
}

struct StepGrads {
    Mat dx;
    Mat dh_prev;
    Mat dc_prev;
};

// dh: gradient w.r.t. this step's h output; dc: gradient w.r.t. this step's c
// arriving from the next step.
StepGrads cell_backward(const LstmCell& cell, const LstmStepCache& sc, const Mat& dh, const Mat& dc_next,
                        LstmCell& grad) {
    const Index H = cell.hidden();
    const auto i = sc.gates.topRows(H).array();
    const auto f = sc.gates.middleRows(H, H).array();
    const auto g = sc.gates.middleRows(2 * H, H).array();
    const auto o = sc.gates.bottomRows(H).array();
    const auto tc = sc.tanh_c.array();

    const Mat dc = (dc_next.array() + dh.array() * o * (1.0 - tc.square())).matrix();
    Mat dz(4 * H, dh.cols());
    dz.topRows(H) = (dc.array() * g * i * (1.0 - i)).matrix();
    dz.middleRows(H, H) = (dc.array() * sc.c_prev.array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * H, H) = (dc.array() * i * (1.0 - g.square())).matrix();
    dz.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();

    grad.input_weights.noalias() += dz * sc.x.transpose();
    grad.recurrent_weights.noalias() += dz * sc.h_prev.transpose();
    grad.bias += dz.rowwise().sum();

    StepGrads out;
    out.dx.noalias() = cell.input_weights.transpose() * dz;
    out.dh_prev.noalias() = cell.recurrent_weights.transpose() * dz;
    out.dc_prev = (dc.array() * f).matrix();
    return out;
}

Mat draw_mask(Index rows, Index cols, double p, Rng& rng) {
    Mat m(rows, cols);
    const double keep_scale = 1.0 / (1.0 - p);
    std::bernoulli_distribution keep(1.0 - p);
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = keep(rng) ? keep_scale : 0.0;
    return m;
}

void add_cell_blocks(std::vector<ParamBlock>& blocks, const std::string& prefix, LstmCell& c) {
    blocks.push_back({prefix + ".input_weights", span_of(c.input_weights)});
    blocks.push_back({prefix + ".recurrent_weights", span_of(c.recurrent_weights)});
    blocks.push_back({prefix + ".bias", span_of(c.bias)});
}

LstmCell zero_cell(const LstmCell& c) {
    return {Mat::Zero(c.input_weights.rows(), c.input_weights.cols()),
            Mat::Zero(c.recurrent_weights.rows(), c.recurrent_weights.cols()), Vec::Zero(c.bias.size())};
}

} // namespace

LstmCell make_lstm_cell(Index in, Index hidden, Rng& rng) {
    LstmCell c{Mat(4 * hidden, in), Mat(4 * hidden, hidden), Vec(4 * hidden)};
    const double limit = 1.0 / std::sqrt(static_cast<double>(in + hidden));
    fill_uniform(c.input_weights, limit, rng);
    fill_uniform(c.recurrent_weights, limit, rng);
    fill_uniform(c.bias, limit, rng);
    return c;
}

std::vector<ParamBlock> LstmEncoderDecoder::parameters() {
    std::vector<ParamBlock> blocks;
    for (std::size_t l = 0; l < encoder.size(); ++l) add_cell_blocks(blocks, "encoder." + std::to_string(l), encoder[l]);
    for (std::size_t l = 0; l < decoder.size(); ++l) add_cell_blocks(blocks, "decoder." + std::to_string(l), decoder[l]);
    blocks.push_back({"projection.weights", span_of(projection.weights)});
    blocks.push_back({"projection.bias", span_of(projection.bias)});
    return blocks;
}

LstmEncoderDecoder LstmEncoderDecoder::zeros_like() const {
    LstmEncoderDecoder z;
    for (const auto& c : encoder) z.encoder.push_back(zero_cell(c));
    for (const auto& c : decoder) z.decoder.push_back(zero_cell(c));
    z.projection = {Mat::Zero(projection.weights.rows(), projection.weights.cols()),
                    Vec::Zero(projection.bias.size()), projection.activation};
    z.dropout = dropout;
    z.reverse_decode = reverse_decode;
    z.window = window;
    return z;
}

void LstmEncoderDecoder::validate() const {
    if (encoder.empty() || encoder.size() != decoder.size()) {
        throw ModelError("LSTM encoder and decoder must have the same, non-zero number of layers");
    }
    const Index H = encoder.front().hidden();
    const Index d = encoder.front().in();
    auto check = [&](const LstmCell& c, Index in, const std::string& where) {
        if (c.hidden() != H || c.in() != in || c.input_weights.rows() != 4 * H ||
            c.recurrent_weights.rows() != 4 * H || c.bias.size() != 4 * H) {
            throw ModelError(where + ": inconsistent gate dimensions");
        }
        if (!c.input_weights.allFinite() || !c.recurrent_weights.allFinite() || !c.bias.allFinite()) {
            throw ModelError(where + ": non-finite parameters");
        }
    };
    for (std::size_t l = 0; l < encoder.size(); ++l) {
        check(encoder[l], l == 0 ? d : H, "encoder layer " + std::to_string(l));
        check(decoder[l], l == 0 ? d : H, "decoder layer " + std::to_string(l));
    }
    if (projection.weights.rows() != d || projection.weights.cols() != H || projection.bias.size() != d) {
        throw ModelError("LSTM output projection has the wrong shape");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ModelError("dropout probability must be in [0, 1)");
    }
    if (window < 1) {
        throw ModelError("LSTM window length must be positive");
    }
}

LstmEncoderDecoder make_lstm(const LstmSpec& spec, Rng& rng) {
    if (spec.input_dim < 1 || spec.hidden < 1 || spec.layers < 1) {
        throw ModelError("LSTM dimensions must be positive");
    }
    LstmEncoderDecoder m;
    for (Index l = 0; l < spec.layers; ++l) {
        m.encoder.push_back(make_lstm_cell(l == 0 ? spec.input_dim : spec.hidden, spec.hidden, rng));
    }
    for (Index l = 0; l < spec.layers; ++l) {
        m.decoder.push_back(make_lstm_cell(l == 0 ? spec.input_dim : spec.hidden, spec.hidden, rng));
    }
    m.projection = make_dense(spec.hidden, spec.input_dim, Activation::identity, rng);
    m.dropout = spec.dropout;
    m.reverse_decode = spec.reverse_decode;
    m.window = spec.window;
    m.validate();
    return m;
}

Sequence lstm_forward(const LstmEncoderDecoder& model, const Sequence& input, Mode mode, Rng* rng,
                      LstmCache* cache) {
    const auto w = static_cast<Index>(input.size());
    if (w != model.window) {
        throw ModelError("sequence length " + std::to_string(w) + " does not match model window " +
                         std::to_string(model.window));
    }
    const Index d = model.input_dim();
    const Index B = input.front().cols();
    for (const auto& x : input) {
        if (x.rows() != d || x.cols() != B) {
            throw ModelError("sequence step has shape " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()) + ", expected " + std::to_string(d) + "x" +
                             std::to_string(B));
        }
    }
    const bool training = mode == Mode::training && model.dropout > 0.0;
    if (training && rng == nullptr) {
        throw ModelError("training-mode forward pass needs a random generator for dropout");
    }
    const std::size_t L = model.layers();
    const Index H = model.hidden();
    const double p = model.dropout;

    if (cache != nullptr) {
        *cache = LstmCache{};
        cache->training = training;
        cache->batch = B;
        cache->enc.resize(static_cast<std::size_t>(w), std::vector<LstmStepCache>(L));
        cache->dec.resize(static_cast<std::size_t>(w), std::vector<LstmStepCache>(L));
        if (training) {
            cache->enc_masks.resize(static_cast<std::size_t>(w));
            cache->dec_masks.resize(static_cast<std::size_t>(w));
            cache->top_masks.resize(static_cast<std::size_t>(w));
        }
        cache->projected_input.resize(static_cast<std::size_t>(w));
    }

    std::vector<Mat> h(L, Mat::Zero(H, B));
    std::vector<Mat> c(L, Mat::Zero(H, B));

    for (Index t = 0; t < w; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        Mat in = input[ts];
        for (std::size_t l = 0; l < L; ++l) {
            LstmStepCache* sc = cache != nullptr ? &cache->enc[ts][l] : nullptr;
            StepOut o = cell_forward(model.encoder[l], in, h[l], c[l], sc);
            h[l] = std::move(o.h);
            c[l] = std::move(o.c);
            if (l + 1 < L) {
                if (training) {
                    Mat mask = draw_mask(H, B, p, *rng);
                    in = h[l].cwiseProduct(mask);
                    if (cache != nullptr) cache->enc_masks[ts].push_back(std::move(mask));
                } else {
                    in = h[l];
                }
            }
        }
    }

    Sequence out(static_cast<std::size_t>(w));
    Mat prev_out;
    for (Index s = 0; s < w; ++s) {
        const auto ss = static_cast<std::size_t>(s);
        if (s > 0) {
            Mat in = prev_out;
            for (std::size_t l = 0; l < L; ++l) {
                LstmStepCache* sc = cache != nullptr ? &cache->dec[ss][l] : nullptr;
                StepOut o = cell_forward(model.decoder[l], in, h[l], c[l], sc);
                h[l] = std::move(o.h);
                c[l] = std::move(o.c);
                if (l + 1 < L) {
                    if (training) {
                        Mat mask = draw_mask(H, B, p, *rng);
                        in = h[l].cwiseProduct(mask);
                        if (cache != nullptr) cache->dec_masks[ss].push_back(std::move(mask));
                    } else {
                        in = h[l];
                    }
                }
            }
        }
        Mat top = h[L - 1];
        if (training) {
            Mat mask = draw_mask(H, B, p, *rng);
            top = top.cwiseProduct(mask);
            if (cache != nullptr) cache->top_masks[ss] = std::move(mask);
        }
        Mat y(d, B);
        y.noalias() = model.projection.weights * top;
        y.colwise() += model.projection.bias;
        if (cache != nullptr) cache->projected_input[ss] = std::move(top);
        const Index idx = model.reverse_decode ? w - 1 - s : s;
        out[static_cast<std::size_t>(idx)] = y;
        prev_out = std::move(y);
    }
    return out;
}

LstmEncoderDecoder lstm_backward(const LstmEncoderDecoder& model, const LstmCache& cache,
                                 const Sequence& output_grads) {
    const auto w = static_cast<Index>(output_grads.size());
    if (w != model.window || static_cast<Index>(cache.enc.size()) != w ||
        static_cast<Index>(cache.projected_input.size()) != w) {
        throw ModelError("stale LSTM cache: sequence length mismatch");
    }
    const std::size_t L = model.layers();
    const Index H = model.hidden();
    const Index d = model.input_dim();
    const Index B = cache.batch;
    for (const auto& g : output_grads) {
        if (g.rows() != d || g.cols() != B) {
            throw ModelError("stale LSTM cache: output gradient shape mismatch");
        }
    }
    if (cache.enc.front().size() != L || cache.enc.front().front().gates.rows() != 4 * H) {
        throw ModelError("stale LSTM cache: layer shape mismatch");
    }

    LstmEncoderDecoder grads = model.zeros_like();
    std::vector<Mat> dh(L, Mat::Zero(H, B));
    std::vector<Mat> dc(L, Mat::Zero(H, B));
    Mat d_next_input = Mat::Zero(d, B);

    for (Index s = w - 1; s >= 0; --s) {
        const auto ss = static_cast<std::size_t>(s);
        const Index idx = model.reverse_decode ? w - 1 - s : s;
        Mat dy = output_grads[static_cast<std::size_t>(idx)];
        if (s + 1 < w) dy += d_next_input;

        grads.projection.weights.noalias() += dy * cache.projected_input[ss].transpose();
        grads.projection.bias += dy.rowwise().sum();
        Mat dtop = model.projection.weights.transpose() * dy;
        if (cache.training) dtop = dtop.cwiseProduct(cache.top_masks[ss]);
        dh[L - 1] += dtop;

        if (s == 0) break;
        Mat dx_above;
        for (std::size_t l = L; l-- > 0;) {
            Mat dh_l = dh[l];
            if (l + 1 < L) {
                dh_l += cache.training ? Mat(dx_above.cwiseProduct(cache.dec_masks[ss][l])) : dx_above;
            }
            StepGrads sg = cell_backward(model.decoder[l], cache.dec[ss][l], dh_l, dc[l], grads.decoder[l]);
            dh[l] = std::move(sg.dh_prev);
            dc[l] = std::move(sg.dc_prev);
            dx_above = std::move(sg.dx);
        }
        d_next_input = std::move(dx_above);
    }

    for (Index t = w - 1; t >= 0; --t) {
        const auto ts = static_cast<std::size_t>(t);
        Mat dx_above;
        for (std::size_t l = L; l-- > 0;) {
            Mat dh_l = dh[l];
            if (l + 1 < L) {
                dh_l += cache.training ? Mat(dx_above.cwiseProduct(cache.enc_masks[ts][l])) : dx_above;
            }
            StepGrads sg = cell_backward(model.encoder[l], cache.enc[ts][l], dh_l, dc[l], grads.encoder[l]);
            dh[l] = std::move(sg.dh_prev);
            dc[l] = std::move(sg.dc_prev);
            if (l > 0) dx_above = std::move(sg.dx);
        }
    }
    return grads;
}

Sequence to_batch(const std::vector<const Mat*>& windows) {
    const Index w = windows.front()->rows();
    const Index d = windows.front()->cols();
    const auto B = static_cast<Index>(windows.size());
    Sequence seq(static_cast<std::size_t>(w), Mat(d, B));
    for (Index b = 0; b < B; ++b) {
        const Mat& win = *windows[static_cast<std::size_t>(b)];
        if (win.rows() != w || win.cols() != d) {
            throw ModelError("windows in a batch must share one shape");
        }
        for (Index t = 0; t < w; ++t) seq[static_cast<std::size_t>(t)].col(b) = win.row(t).transpose();
    }
    return seq;
}

Mat lstm_reconstruct(const LstmEncoderDecoder& model, const Mat& window) {
    const Sequence out = lstm_forward(model, to_batch({&window}), Mode::inference);
    Mat rec(window.rows(), window.cols());
    for (Index t = 0; t < window.rows(); ++t) rec.row(t) = out[static_cast<std::size_t>(t)].col(0).transpose();
    return rec;
}

} // namespace tdad::nn
