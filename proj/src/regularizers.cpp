#include "dropfilter/regularizers.hpp"

#include <span>

namespace dropfilter {

Method parse_method(std::string_view name) {
    for (Method m : all_methods()) {
        if (to_string(m) == name) return m;
    }
    throw ValueError("unknown method '" + std::string(name) +
                     "' (expected none|dropout|dropconnect|dropfilter|dropfilter_plus|"
                     "dropout_and_dropfilter|dropout_and_dropfilter_plus)");
}

std::string to_string(Method m) {
    switch (m) {
    case Method::none: return "none";
    case Method::dropout: return "dropout";
    case Method::dropconnect: return "dropconnect";
    case Method::dropfilter: return "dropfilter";
    case Method::dropfilter_plus: return "dropfilter_plus";
    case Method::dropout_and_dropfilter: return "dropout_and_dropfilter";
    case Method::dropout_and_dropfilter_plus: return "dropout_and_dropfilter_plus";
    }
    return "?";
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods = {
        Method::none,
        Method::dropout,
        Method::dropconnect,
        Method::dropfilter,
        Method::dropfilter_plus,
        Method::dropout_and_dropfilter,
        Method::dropout_and_dropfilter_plus,
    };
    return methods;
}

void RegularizerConfig::validate() const {
    if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) {
        throw ValueError("drop_rate must be in [0,1], got " + std::to_string(drop_rate));
    }
}

bool RegularizerConfig::uses_dropout() const {
    return method == Method::dropout || method == Method::dropout_and_dropfilter ||
           method == Method::dropout_and_dropfilter_plus;
}

bool RegularizerConfig::uses_dropfilter() const {
    return method == Method::dropfilter || method == Method::dropout_and_dropfilter;
}

bool RegularizerConfig::uses_dropfilter_plus() const {
    return method == Method::dropfilter_plus || method == Method::dropout_and_dropfilter_plus;
}

bool RegularizerConfig::masks_fc_params() const {
    // standalone dropfilter variants degenerate to DropConnect on the FC
    // layer; the combined modes leave the FC parameters to Dropout alone
    return method == Method::dropconnect || method == Method::dropfilter ||
           method == Method::dropfilter_plus;
}

std::pair<Tensor, Mask> dropout_apply(const Tensor& activations, double p, RandomSource& rng) {
    Mask mask = sample_bernoulli_mask(rng, activations.shape(), 1.0 - p);
    return {elementwise_mul(activations, mask), std::move(mask)};
}

namespace {

// shared weight/bias masking: weights first, then bias, row-major
template <typename Params>
std::pair<Params, MaskSet> mask_params(const Params& params, double p, RandomSource& rng) {
    MaskSet masks;
    masks.generation = MaskGeneration::bernoulli;
    masks.filter_mask = sample_bernoulli_mask(rng, params.weights.shape(), 1.0 - p);
    masks.bias_mask = sample_bernoulli_mask(rng, params.bias.shape(), 1.0 - p);
    Params masked = params;
    mul_inplace(masked.weights, masks.filter_mask);
    mul_inplace(masked.bias, masks.bias_mask);
    return {std::move(masked), std::move(masks)};
}

template <typename Params>
Params scale_params(const Params& params, double factor) {
    Params out = params;
    scale_inplace(out.weights, factor);
    scale_inplace(out.bias, factor);
    return out;
}

} // namespace

std::pair<DenseWeights, MaskSet> dropconnect_mask(const DenseWeights& params, double p,
                                                  RandomSource& rng) {
    return mask_params(params, p, rng);
}

std::pair<FilterBank, MaskSet> dropfilter_mask(const FilterBank& filters, double p,
                                               RandomSource& rng) {
    return mask_params(filters, p, rng);
}

std::pair<DenseWeights, MaskSet> dropfilter_mask(const DenseWeights& params, double p,
                                                 RandomSource& rng) {
    return mask_params(params, p, rng);
}

LayerGrads dropfilter_grad_postprocess(LayerGrads grads, const MaskSet& masks) {
    mul_inplace(grads.grad_weights, masks.filter_mask);
    mul_inplace(grads.grad_bias, masks.bias_mask);
    return grads;
}

std::pair<Tensor, Mask> dfplus_forward_mask(const Tensor& layer_output, RandomSource& rng,
                                            bool per_column) {
    Mask mask(layer_output.shape());
    if (per_column && layer_output.rank() == 4) {
        const std::size_t n = layer_output.extent(0), c = layer_output.extent(1),
                          h = layer_output.extent(2), w = layer_output.extent(3);
        for (std::size_t i = 0; i < n * c; ++i) {
            double* plane = mask.data() + i * h * w;
            for (std::size_t x = 0; x < w; ++x) {
                const double u = rng.next_uniform();
                for (std::size_t y = 0; y < h; ++y) plane[y * w + x] = u;
            }
        }
    } else {
        fill_uniform(rng, std::span<double>(mask.values()));
    }
    return {elementwise_mul(layer_output, mask), std::move(mask)};
}

MaskSet dfplus_grad_masks(const FilterBank& filters, double p, std::size_t n, RandomSource& rng) {
    if (n < 1) throw ValueError("dfplus_grad_masks n must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ValueError("drop_rate must be in [0,1], got " + std::to_string(p));
    }
    const double mean = 1.0 - p;
    const double variance = p * (1.0 - p) / static_cast<double>(n);
    MaskSet masks;
    masks.generation = MaskGeneration::normal;
    masks.filter_mask = sample_normal_mask(rng, filters.weights.shape(), mean, variance);
    masks.bias_mask = sample_normal_mask(rng, filters.bias.shape(), mean, variance);
    return masks;
}

Tensor perposition_masked_conv_oracle(const Tensor& input, const FilterBank& filters, double p,
                                      RandomSource& rng, std::size_t stride, std::size_t pad) {
    const detail::ConvDims d = detail::conv_dims(input, filters, stride, pad);
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ValueError("drop_rate must be in [0,1], got " + std::to_string(p));
    }
    const double keep = 1.0 - p;
    Tensor out({d.n, d.out_c, d.out_h, d.out_w});
    const double* in = input.data();
    const double* wts = filters.weights.data();
    const std::size_t in_chw = d.in_c * d.h * d.w;
    const std::size_t w_per_oc = d.in_c * d.k * d.k;
    // per output element: fresh filter mask (row-major over inC,k,k), then a
    // fresh bias mask draw
    for (std::size_t n = 0; n < d.n; ++n) {
        for (std::size_t oc = 0; oc < d.out_c; ++oc) {
            const double* w_oc = wts + oc * w_per_oc;
            for (std::size_t oy = 0; oy < d.out_h; ++oy) {
                for (std::size_t ox = 0; ox < d.out_w; ++ox) {
                    double acc = 0.0;
                    const double* wp = w_oc;
                    for (std::size_t ic = 0; ic < d.in_c; ++ic) {
                        const double* channel = in + n * in_chw + ic * d.h * d.w;
                        for (std::size_t ky = 0; ky < d.k; ++ky) {
                            const std::ptrdiff_t y =
                                static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                static_cast<std::ptrdiff_t>(d.pad);
                            for (std::size_t kx = 0; kx < d.k; ++kx, ++wp) {
                                const double r = rng.next_uniform() < keep ? 1.0 : 0.0;
                                const std::ptrdiff_t x =
                                    static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                    static_cast<std::ptrdiff_t>(d.pad);
                                if (y < 0 || y >= static_cast<std::ptrdiff_t>(d.h) || x < 0 ||
                                    x >= static_cast<std::ptrdiff_t>(d.w)) {
                                    continue;
                                }
                                acc += r * (*wp) *
                                       channel[static_cast<std::size_t>(y) * d.w +
                                               static_cast<std::size_t>(x)];
                            }
                        }
                    }
                    const double rb = rng.next_uniform() < keep ? 1.0 : 0.0;
                    out(n, oc, oy, ox) = acc + rb * filters.bias[oc];
                }
            }
        }
    }
    return out;
}

FilterBank test_time_scale(const FilterBank& params, const RegularizerConfig& cfg) {
    cfg.validate();
    if (cfg.uses_dropfilter()) return scale_params(params, cfg.retention());
    return params;
}

DenseWeights test_time_scale(const DenseWeights& params, const RegularizerConfig& cfg) {
    cfg.validate();
    if (cfg.masks_fc_params()) return scale_params(params, cfg.retention());
    return params;
}

} // namespace dropfilter
