#pragma once

#include "tdad/nn/layers.hpp"

#include <vector>

namespace tdad::nn {

/// One LSTM layer. Gate rows are stacked [input; forget; candidate; output],
/// each block `hidden()` rows tall.
struct LstmCell {
    Mat input_weights;      // 4H x in
    Mat recurrent_weights;  // 4H x H
    Vec bias;               // 4H

    Index in() const { return input_weights.cols(); }
    Index hidden() const { return recurrent_weights.cols(); }
};

LstmCell make_lstm_cell(Index in, Index hidden, Rng& rng);

/// Sequence-to-sequence reconstruction model.
///
/// The encoder stack reads the window; its final (h, c) of every layer seed the
/// decoder stack. The first output is projected from that state, every later
/// decoder step consumes the previous output (no teacher forcing). With
/// `reverse_decode` the decoder emits the window back to front and the result
/// is re-reversed, so output[t] always lines up with input[t].
struct LstmEncoderDecoder {
    std::vector<LstmCell> encoder;
    std::vector<LstmCell> decoder;
    DenseLayer projection;  // d x H, identity activation
    double dropout = 0.2;
    bool reverse_decode = true;
    Index window = 180;

    Index input_dim() const { return encoder.front().in(); }
    Index hidden() const { return encoder.front().hidden(); }
    std::size_t layers() const { return encoder.size(); }

    std::vector<ParamBlock> parameters();
    LstmEncoderDecoder zeros_like() const;
    void validate() const;
};

struct LstmSpec {
    Index input_dim = 0;
    Index hidden = 64;
    Index layers = 2;
    double dropout = 0.2;
    bool reverse_decode = true;
    Index window = 180;
};

LstmEncoderDecoder make_lstm(const LstmSpec& spec, Rng& rng);

enum class Mode { inference, training };

// A batch of sequences: element t is the d x batch matrix of time step t.
using Sequence = std::vector<Mat>;

struct LstmStepCache {
    Mat x;       // cell input (after dropout for upper layers)
    Mat h_prev;
    Mat c_prev;
    Mat gates;   // activated gates, 4H x B
    Mat c;
    Mat tanh_c;
};

struct LstmCache {
    std::vector<std::vector<LstmStepCache>> enc;  // [t][layer]
    std::vector<std::vector<LstmStepCache>> dec;  // [s][layer], s = 1 .. w-1
    // Scaled dropout masks, empty in inference mode.
    std::vector<std::vector<Mat>> enc_masks;      // [t][layer], layer < L-1
    std::vector<std::vector<Mat>> dec_masks;      // [s][layer], layer < L-1
    std::vector<Mat> top_masks;                   // [s], projection input
    std::vector<Mat> projected_input;             // [s], masked top hidden state
    bool training = false;
    Index batch = 0;
};

// Dropout is drawn from `rng` in training mode only; rng may be null in
// inference mode.
Sequence lstm_forward(const LstmEncoderDecoder& model, const Sequence& input, Mode mode,
                      Rng* rng = nullptr, LstmCache* cache = nullptr);

// Exact gradients by backpropagation through time. `output_grads[t]` is
// dLoss/dOutput[t] in the aligned (input) order.
LstmEncoderDecoder lstm_backward(const LstmEncoderDecoder& model, const LstmCache& cache,
                                 const Sequence& output_grads);

// Convenience for one sequence stored as w x d (row = time step).
Mat lstm_reconstruct(const LstmEncoderDecoder& model, const Mat& window);

// Packs sequences (each w x d) into time-major batch form.
Sequence to_batch(const std::vector<const Mat*>& windows);

} // namespace tdad::nn
