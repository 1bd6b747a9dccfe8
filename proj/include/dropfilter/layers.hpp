#pragma once

#include <cstdint>
#include <vector>

#include "dropfilter/tensor.hpp"

namespace dropfilter {

// Convolution layer parameters: weights (outC, inC, k, k), bias (outC,).
struct FilterBank {
    Tensor weights;
    Tensor bias;

    std::size_t out_channels() const { return weights.extent(0); }
    std::size_t in_channels() const { return weights.extent(1); }
    std::size_t kernel() const { return weights.extent(2); }
};

// Fully-connected layer parameters: weights (outDim, inDim), bias (outDim,).
struct DenseWeights {
    Tensor weights;
    Tensor bias;

    std::size_t out_dim() const { return weights.extent(0); }
    std::size_t in_dim() const { return weights.extent(1); }
};

struct LayerGrads {
    Tensor grad_weights;
    Tensor grad_bias;
    Tensor grad_input;
};

// Cross-correlation (no kernel flip), the usual CNN convention.
// input (N, inC, H, W) -> output (N, outC, H', W') with
// H' = (H + 2*pad - k)/stride + 1.
Tensor conv2d_forward(const Tensor& input, const FilterBank& filters, std::size_t stride = 1,
                      std::size_t pad = 0);
LayerGrads conv2d_backward(const Tensor& input, const FilterBank& filters, const Tensor& grad_out,
                           std::size_t stride = 1, std::size_t pad = 0);

// out = input * W^T + bias, input (N, inDim) -> (N, outDim)
Tensor fc_forward(const Tensor& input, const DenseWeights& params);
LayerGrads fc_backward(const Tensor& input, const DenseWeights& params, const Tensor& grad_out);

Tensor relu(const Tensor& input);
// passes grad where input > 0
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

// 2x2 non-overlapping max pool; spatial extents must be even.
// argmax holds, per output element, the flat index of the winning input
// element; ties go to the first element of the window in row-major order.
struct PoolResult {
    Tensor output;
    std::vector<std::size_t> argmax;
    std::vector<std::size_t> input_shape;
};
PoolResult maxpool2(const Tensor& input);
Tensor maxpool2_backward(const PoolResult& pool, const Tensor& grad_out);

// Mean softmax cross-entropy over the batch, with max-subtraction for
// numerical stability. grad_logits = (softmax - onehot) / N.
struct XentResult {
    double loss;
    Tensor grad_logits;
};
XentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels);

namespace detail {

struct ConvDims {
    std::size_t n, in_c, h, w;
    std::size_t out_c, k;
    std::size_t stride, pad;
    std::size_t out_h, out_w;
    std::size_t patch() const { return in_c * k * k; }
    std::size_t out_spatial() const { return out_h * out_w; }
};

ConvDims conv_dims(const Tensor& input, const FilterBank& filters, std::size_t stride,
                   std::size_t pad);

// cols is (inC*k*k) x (N * outH * outW), column index = sample * outHW + pos.
void im2col(const Tensor& input, const ConvDims& d, std::vector<double>& cols);

// Forward/backward given a prebuilt cols buffer (the training loop reuses the
// forward-pass buffer in backward).
Tensor conv2d_forward_cols(const std::vector<double>& cols, const FilterBank& filters,
                           const ConvDims& d);
LayerGrads conv2d_backward_cols(const std::vector<double>& cols, const FilterBank& filters,
                                const Tensor& grad_out, const ConvDims& d);

} // namespace detail

} // namespace dropfilter
