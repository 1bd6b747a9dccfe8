#include "dropfilter/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dropfilter/blas.hpp"

namespace dropfilter {

namespace {

// scratch buffers reused across calls; every consumer overwrites the region
// it reads, so stale contents are harmless
std::vector<double>& scratch(int slot, std::size_t size) {
    thread_local std::vector<double> buffers[4];
    std::vector<double>& buf = buffers[slot];
    if (buf.size() < size) buf.resize(size);
    return buf;
}

} // namespace

namespace detail {

ConvDims conv_dims(const Tensor& input, const FilterBank& filters, std::size_t stride,
                   std::size_t pad) {
    if (input.rank() != 4) {
        throw ShapeError("conv2d input must be rank 4 (N,C,H,W), got " +
                         shape_to_string(input.shape()));
    }
    if (filters.weights.rank() != 4 || filters.weights.extent(2) != filters.weights.extent(3)) {
        throw ShapeError("conv2d filters must be (outC,inC,k,k), got " +
                         shape_to_string(filters.weights.shape()));
    }
    if (filters.bias.rank() != 1 || filters.bias.extent(0) != filters.weights.extent(0)) {
        throw ShapeError("conv2d bias must be (outC,)");
    }
    if (stride == 0) throw ValueError("conv2d stride must be positive");
    ConvDims d;
    d.n = input.extent(0);
    d.in_c = input.extent(1);
    d.h = input.extent(2);
    d.w = input.extent(3);
    d.out_c = filters.weights.extent(0);
    d.k = filters.weights.extent(2);
    d.stride = stride;
    d.pad = pad;
    if (filters.weights.extent(1) != d.in_c) {
        throw ShapeError("conv2d channel mismatch: input has " + std::to_string(d.in_c) +
                         ", filters expect " + std::to_string(filters.weights.extent(1)));
    }
    if (d.h + 2 * pad < d.k || d.w + 2 * pad < d.k) {
        throw ShapeError("conv2d window " + std::to_string(d.k) + "x" + std::to_string(d.k) +
                         " larger than padded input " + std::to_string(d.h + 2 * pad) + "x" +
                         std::to_string(d.w + 2 * pad));
    }
    d.out_h = (d.h + 2 * pad - d.k) / stride + 1;
    d.out_w = (d.w + 2 * pad - d.k) / stride + 1;
    return d;
}

void im2col(const Tensor& input, const ConvDims& d, std::vector<double>& cols) {
    const std::size_t patch = d.patch();
    const std::size_t out_hw = d.out_spatial();
    const std::size_t total_cols = d.n * out_hw;
    cols.resize(patch * total_cols);
    const double* in = input.data();
    const std::size_t in_chw = d.in_c * d.h * d.w;
    const std::ptrdiff_t height = static_cast<std::ptrdiff_t>(d.h);
    const std::ptrdiff_t width = static_cast<std::ptrdiff_t>(d.w);

#pragma omp parallel for schedule(static)
    for (std::size_t row = 0; row < patch; ++row) {
        const std::size_t ic = row / (d.k * d.k);
        const std::size_t ky = (row / d.k) % d.k;
        const std::size_t kx = row % d.k;
        double* dst_base = cols.data() + row * total_cols;
        for (std::size_t n = 0; n < d.n; ++n) {
            const double* channel = in + n * in_chw + ic * d.h * d.w;
            double* dst = dst_base + n * out_hw;
            for (std::size_t oy = 0; oy < d.out_h; ++oy) {
                const std::ptrdiff_t y =
                    static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                    static_cast<std::ptrdiff_t>(d.pad);
                if (y < 0 || y >= height) {
                    std::fill(dst, dst + d.out_w, 0.0);
                    dst += d.out_w;
                    continue;
                }
                const double* src_row = channel + static_cast<std::size_t>(y) * d.w;
                const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(kx) -
                                          static_cast<std::ptrdiff_t>(d.pad);
                if (d.stride == 1 && x0 >= 0 &&
                    x0 + static_cast<std::ptrdiff_t>(d.out_w) <= width) {
                    std::memcpy(dst, src_row + x0, d.out_w * sizeof(double));
                    dst += d.out_w;
                    continue;
                }
                for (std::size_t ox = 0; ox < d.out_w; ++ox) {
                    const std::ptrdiff_t x =
                        static_cast<std::ptrdiff_t>(ox * d.stride) + x0;
                    *dst++ = (x < 0 || x >= width) ? 0.0 : src_row[static_cast<std::size_t>(x)];
                }
            }
        }
    }
}

namespace {

// scatter of grad_cols back into the (padded) input gradient; parallel over
// samples, whose target regions are disjoint
void col2im_accumulate(const std::vector<double>& cols, const ConvDims& d, Tensor& grad_input) {
    const std::size_t out_hw = d.out_spatial();
    const std::size_t total_cols = d.n * out_hw;
    double* gin = grad_input.data();
    const std::size_t in_chw = d.in_c * d.h * d.w;
#pragma omp parallel for schedule(static)
    for (std::size_t n = 0; n < d.n; ++n) {
        double* sample = gin + n * in_chw;
        for (std::size_t ic = 0; ic < d.in_c; ++ic) {
            double* channel = sample + ic * d.h * d.w;
            for (std::size_t ky = 0; ky < d.k; ++ky) {
                for (std::size_t kx = 0; kx < d.k; ++kx) {
                    const std::size_t row = (ic * d.k + ky) * d.k + kx;
                    const double* src = cols.data() + row * total_cols + n * out_hw;
                    for (std::size_t oy = 0; oy < d.out_h; ++oy) {
                        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                                 static_cast<std::ptrdiff_t>(d.pad);
                        if (y < 0 || y >= static_cast<std::ptrdiff_t>(d.h)) {
                            src += d.out_w;
                            continue;
                        }
                        double* dst_row = channel + static_cast<std::size_t>(y) * d.w;
                        for (std::size_t ox = 0; ox < d.out_w; ++ox) {
                            const std::ptrdiff_t x =
                                static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                static_cast<std::ptrdiff_t>(d.pad);
                            const double v = *src++;
                            if (x >= 0 && x < static_cast<std::ptrdiff_t>(d.w)) {
                                dst_row[static_cast<std::size_t>(x)] += v;
                            }
                        }
                    }
                }
            }
        }
    }
}

void check_grad_out(const Tensor& grad_out, const ConvDims& d) {
    const std::vector<std::size_t> expect{d.n, d.out_c, d.out_h, d.out_w};
    if (grad_out.shape() != expect) {
        throw ShapeError("conv2d grad_out shape " + shape_to_string(grad_out.shape()) +
                         " does not match forward output " + shape_to_string(expect));
    }
}

} // namespace

Tensor conv2d_forward_cols(const std::vector<double>& cols, const FilterBank& filters,
                           const ConvDims& d) {
    const std::size_t patch = d.patch();
    const std::size_t out_hw = d.out_spatial();
    const std::size_t total_cols = d.n * out_hw;
    // out_mat (outC x N*outHW) = W (outC x patch) * cols
    std::vector<double>& out_mat = scratch(0, d.out_c * total_cols);
    gemm(false, false, d.out_c, total_cols, patch, 1.0, filters.weights.data(), patch, cols.data(),
         total_cols, 0.0, out_mat.data(), total_cols);

    Tensor out({d.n, d.out_c, d.out_h, d.out_w});
    double* op = out.data();
    const double* bias = filters.bias.data();
#pragma omp parallel for schedule(static)
    for (std::size_t n = 0; n < d.n; ++n) {
        for (std::size_t oc = 0; oc < d.out_c; ++oc) {
            const double* src = out_mat.data() + oc * total_cols + n * out_hw;
            double* dst = op + (n * d.out_c + oc) * out_hw;
            const double b = bias[oc];
            for (std::size_t i = 0; i < out_hw; ++i) dst[i] = src[i] + b;
        }
    }
    return out;
}

LayerGrads conv2d_backward_cols(const std::vector<double>& cols, const FilterBank& filters,
                                const Tensor& grad_out, const ConvDims& d) {
    check_grad_out(grad_out, d);
    const std::size_t patch = d.patch();
    const std::size_t out_hw = d.out_spatial();
    const std::size_t total_cols = d.n * out_hw;

    // gather grad_out into (outC x N*outHW)
    std::vector<double>& g_mat = scratch(1, d.out_c * total_cols);
    const double* gp = grad_out.data();
#pragma omp parallel for schedule(static)
    for (std::size_t n = 0; n < d.n; ++n) {
        for (std::size_t oc = 0; oc < d.out_c; ++oc) {
            std::memcpy(g_mat.data() + oc * total_cols + n * out_hw,
                        gp + (n * d.out_c + oc) * out_hw, out_hw * sizeof(double));
        }
    }

    LayerGrads grads;
    grads.grad_weights = Tensor(filters.weights.shape());
    grads.grad_bias = Tensor(filters.bias.shape());
    grads.grad_input = Tensor({d.n, d.in_c, d.h, d.w});

    // grad_bias[oc] = sum over batch and positions
    for (std::size_t oc = 0; oc < d.out_c; ++oc) {
        const double* row = g_mat.data() + oc * total_cols;
        double s = 0.0;
        for (std::size_t i = 0; i < total_cols; ++i) s += row[i];
        grads.grad_bias[oc] = s;
    }

    // grad_W (outC x patch) = g_mat * cols^T
    gemm(false, true, d.out_c, patch, total_cols, 1.0, g_mat.data(), total_cols, cols.data(),
         total_cols, 0.0, grads.grad_weights.data(), patch);

    // grad_cols (patch x N*outHW) = W^T * g_mat, then scatter back
    std::vector<double>& grad_cols = scratch(2, patch * total_cols);
    gemm(true, false, patch, total_cols, d.out_c, 1.0, filters.weights.data(), patch, g_mat.data(),
         total_cols, 0.0, grad_cols.data(), total_cols);
    col2im_accumulate(grad_cols, d, grads.grad_input);
    return grads;
}

} // namespace detail

Tensor conv2d_forward(const Tensor& input, const FilterBank& filters, std::size_t stride,
                      std::size_t pad) {
    const detail::ConvDims d = detail::conv_dims(input, filters, stride, pad);
    std::vector<double>& cols = scratch(3, 0);
    detail::im2col(input, d, cols);
    return detail::conv2d_forward_cols(cols, filters, d);
}

LayerGrads conv2d_backward(const Tensor& input, const FilterBank& filters, const Tensor& grad_out,
                           std::size_t stride, std::size_t pad) {
    const detail::ConvDims d = detail::conv_dims(input, filters, stride, pad);
    std::vector<double>& cols = scratch(3, 0);
    detail::im2col(input, d, cols);
    return detail::conv2d_backward_cols(cols, filters, grad_out, d);
}

Tensor fc_forward(const Tensor& input, const DenseWeights& params) {
    if (input.rank() != 2) {
        throw ShapeError("fc input must be rank 2 (N,inDim), got " +
                         shape_to_string(input.shape()));
    }
    if (params.weights.rank() != 2 || params.bias.rank() != 1 ||
        params.bias.extent(0) != params.out_dim()) {
        throw ShapeError("fc params must be W (outDim,inDim), bias (outDim,)");
    }
    if (input.extent(1) != params.in_dim()) {
        throw ShapeError("fc dimension mismatch: input has " + std::to_string(input.extent(1)) +
                         ", weights expect " + std::to_string(params.in_dim()));
    }
    const std::size_t n = input.extent(0);
    const std::size_t out_dim = params.out_dim();
    Tensor out({n, out_dim});
    detail::gemm(false, true, n, out_dim, params.in_dim(), 1.0, input.data(), params.in_dim(),
                 params.weights.data(), params.in_dim(), 0.0, out.data(), out_dim);
    const double* bias = params.bias.data();
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.data() + i * out_dim;
        for (std::size_t j = 0; j < out_dim; ++j) row[j] += bias[j];
    }
    return out;
}

LayerGrads fc_backward(const Tensor& input, const DenseWeights& params, const Tensor& grad_out) {
    if (input.rank() != 2 || grad_out.rank() != 2) {
        throw ShapeError("fc backward expects rank-2 input and grad_out");
    }
    const std::size_t n = input.extent(0);
    const std::size_t in_dim = params.in_dim();
    const std::size_t out_dim = params.out_dim();
    if (input.extent(1) != in_dim || grad_out.extent(0) != n || grad_out.extent(1) != out_dim) {
        throw ShapeError("fc backward shape mismatch: input " + shape_to_string(input.shape()) +
                         ", grad_out " + shape_to_string(grad_out.shape()));
    }
    LayerGrads grads;
    grads.grad_weights = Tensor({out_dim, in_dim});
    grads.grad_bias = Tensor({out_dim});
    grads.grad_input = Tensor({n, in_dim});

    // grad_W = grad_out^T * input
    detail::gemm(true, false, out_dim, in_dim, n, 1.0, grad_out.data(), out_dim, input.data(),
                 in_dim, 0.0, grads.grad_weights.data(), in_dim);
    // grad_b = column sums of grad_out
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = grad_out.data() + i * out_dim;
        for (std::size_t j = 0; j < out_dim; ++j) grads.grad_bias[j] += row[j];
    }
    // grad_input = grad_out * W
    detail::gemm(false, false, n, in_dim, out_dim, 1.0, grad_out.data(), out_dim,
                 params.weights.data(), in_dim, 0.0, grads.grad_input.data(), in_dim);
    return grads;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    double* op = out.data();
    const std::size_t size = out.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < size; ++i) op[i] = op[i] > 0.0 ? op[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
    if (!input.same_shape(grad_out)) {
        throw ShapeError("relu_backward shape mismatch");
    }
    Tensor out = grad_out;
    const double* in = input.data();
    double* op = out.data();
    const std::size_t size = out.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < size; ++i) {
        if (in[i] <= 0.0) op[i] = 0.0;
    }
    return out;
}

PoolResult maxpool2(const Tensor& input) {
    if (input.rank() != 4) {
        throw ShapeError("maxpool2 input must be rank 4, got " + shape_to_string(input.shape()));
    }
    const std::size_t n = input.extent(0), c = input.extent(1), h = input.extent(2),
                      w = input.extent(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2 requires even spatial extents, got " +
                         std::to_string(h) + "x" + std::to_string(w));
    }
    PoolResult res;
    res.input_shape = input.shape();
    res.output = Tensor({n, c, h / 2, w / 2});
    res.argmax.resize(res.output.size());
    const double* in = input.data();
    double* out = res.output.data();
    std::size_t oi = 0;
    for (std::size_t nc = 0; nc < n * c; ++nc) {
        const double* plane = in + nc * h * w;
        const std::size_t base = nc * h * w;
        for (std::size_t oy = 0; oy < h / 2; ++oy) {
            for (std::size_t ox = 0; ox < w / 2; ++ox) {
                const std::size_t y0 = oy * 2, x0 = ox * 2;
                // strict > keeps the first (row-major) element on ties
                std::size_t best = y0 * w + x0;
                double best_v = plane[best];
                const std::size_t cands[3] = {y0 * w + x0 + 1, (y0 + 1) * w + x0,
                                              (y0 + 1) * w + x0 + 1};
                for (std::size_t cand : cands) {
                    if (plane[cand] > best_v) {
                        best_v = plane[cand];
                        best = cand;
                    }
                }
                out[oi] = best_v;
                res.argmax[oi] = base + best;
                ++oi;
            }
        }
    }
    return res;
}

Tensor maxpool2_backward(const PoolResult& pool, const Tensor& grad_out) {
    if (!grad_out.same_shape(pool.output)) {
        throw ShapeError("maxpool2_backward grad_out shape mismatch");
    }
    Tensor grad_input(pool.input_shape);
    double* gp = grad_input.data();
    const double* go = grad_out.data();
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        gp[pool.argmax[i]] += go[i];
    }
    return grad_input;
}

XentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) {
        throw ShapeError("softmax_xent logits must be rank 2, got " +
                         shape_to_string(logits.shape()));
    }
    const std::size_t n = logits.extent(0), classes = logits.extent(1);
    if (labels.size() != n) {
        throw ShapeError("softmax_xent labels size " + std::to_string(labels.size()) +
                         " does not match batch " + std::to_string(n));
    }
    for (int lab : labels) {
        if (lab < 0 || static_cast<std::size_t>(lab) >= classes) {
            throw ValueError("softmax_xent label " + std::to_string(lab) + " outside [0," +
                             std::to_string(classes) + ")");
        }
    }
    XentResult res;
    res.grad_logits = Tensor({n, classes});
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = logits.data() + i * classes;
        double* grow = res.grad_logits.data() + i * classes;
        const double mx = *std::max_element(row, row + classes);
        double z = 0.0;
        for (std::size_t j = 0; j < classes; ++j) z += std::exp(row[j] - mx);
        const double log_z = std::log(z);
        const std::size_t lab = static_cast<std::size_t>(labels[i]);
        loss += -(row[lab] - mx - log_z);
        for (std::size_t j = 0; j < classes; ++j) {
            const double p = std::exp(row[j] - mx) / z;
            grow[j] = (p - (j == lab ? 1.0 : 0.0)) / static_cast<double>(n);
        }
    }
    res.loss = loss / static_cast<double>(n);
    return res;
}

} // namespace dropfilter
