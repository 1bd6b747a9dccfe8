#include "dropfilter/network.hpp"

#include <cstring>

namespace dropfilter {

namespace {

constexpr double kUniformMaskMean = 0.5; // E[U(0,1)], the dfplus output-mask expectation

Tensor reshaped(const Tensor& t, std::vector<std::size_t> shape) {
    return Tensor(std::move(shape), t.values());
}

} // namespace

Network::Network(InputShape input, std::vector<ConvLayerSpec> convs, std::size_t num_classes,
                 RandomSource& init_rng)
    : input_(input) {
    if (num_classes < 2) throw ValueError("network needs at least 2 classes");
    std::size_t c = input.channels, h = input.height, w = input.width;
    for (const ConvLayerSpec& spec : convs) {
        ConvLayer layer;
        layer.spec = spec;
        layer.params.weights = Tensor({spec.out_channels, c, spec.kernel, spec.kernel});
        layer.params.bias = Tensor({spec.out_channels});
        const double fan_in = static_cast<double>(c * spec.kernel * spec.kernel);
        fill_normal(init_rng, std::span<double>(layer.params.weights.values()), 0.0,
                    2.0 / fan_in);
        if (h + 2 * spec.pad < spec.kernel || w + 2 * spec.pad < spec.kernel) {
            throw ShapeError("conv layer kernel exceeds its input");
        }
        h = (h + 2 * spec.pad - spec.kernel) / spec.stride + 1;
        w = (w + 2 * spec.pad - spec.kernel) / spec.stride + 1;
        layer.out_h = h;
        layer.out_w = w;
        if (spec.pool) {
            if (h % 2 != 0 || w % 2 != 0) {
                throw ShapeError("pooled conv layer output must have even extents, got " +
                                 std::to_string(h) + "x" + std::to_string(w));
            }
            h /= 2;
            w /= 2;
        }
        c = spec.out_channels;
        convs_.push_back(std::move(layer));
    }
    const std::size_t flat = c * h * w;
    fc_.weights = Tensor({num_classes, flat});
    fc_.bias = Tensor({num_classes});
    fill_normal(init_rng, std::span<double>(fc_.weights.values()), 0.0,
                2.0 / static_cast<double>(flat));
}

Tensor Network::forward_train(const Tensor& batch, const RegularizerConfig& cfg,
                              RandomSource& dropout_rng, RandomSource& filter_rng,
                              TrainCache& cache) const {
    cfg.validate();
    const double p = cfg.drop_rate;
    const bool combined_dropout = cfg.uses_dropout() && cfg.method != Method::dropout;

    // At p=0 the per-position view of DropFilter-PLUS drops nothing, so the
    // uniform output-mask acceleration is skipped and p=0 reproduces the
    // unregularized forward for every method.
    const bool dfplus_active = cfg.uses_dropfilter_plus() && p > 0.0;

    cache.conv.resize(convs_.size());
    Tensor x = batch;
    for (std::size_t li = 0; li < convs_.size(); ++li) {
        const ConvLayer& layer = convs_[li];
        // reuse the per-layer buffers (cols especially) across batches
        ConvCache& cc = cache.conv[li];
        cc.masked_params.reset();
        cc.param_masks.reset();
        cc.dfplus_mask.reset();
        cc.pool.reset();
        cc.dropout_mask.reset();
        const FilterBank* used = &layer.params;
        if (cfg.uses_dropfilter()) {
            auto [masked, masks] = dropfilter_mask(layer.params, p, filter_rng);
            cc.masked_params = std::move(masked);
            cc.param_masks = std::move(masks);
            used = &*cc.masked_params;
        }
        cc.dims = detail::conv_dims(x, *used, layer.spec.stride, layer.spec.pad);
        detail::im2col(x, cc.dims, cc.cols);
        Tensor a = detail::conv2d_forward_cols(cc.cols, *used, cc.dims);
        if (dfplus_active && cfg.dfplus_mask_pre_activation) {
            auto [masked, mask] = dfplus_forward_mask(a, filter_rng, cfg.dfplus_per_column_mask);
            a = std::move(masked);
            cc.dfplus_mask = std::move(mask);
        }
        cc.relu_input = a;
        Tensor z = relu(a);
        if (dfplus_active && !cfg.dfplus_mask_pre_activation) {
            auto [masked, mask] = dfplus_forward_mask(z, filter_rng, cfg.dfplus_per_column_mask);
            z = std::move(masked);
            cc.dfplus_mask = std::move(mask);
        }
        if (layer.spec.pool) {
            cc.pool = maxpool2(z);
            z = cc.pool->output;
        }
        if (combined_dropout) {
            auto [masked, mask] = dropout_apply(z, p, dropout_rng);
            z = std::move(masked);
            cc.dropout_mask = std::move(mask);
        }
        x = std::move(z);
    }

    cache.fc_dropout_mask.reset();
    cache.masked_fc.reset();
    cache.fc_param_masks.reset();

    Tensor flat = reshaped(x, {x.extent(0), flattened_dim()});
    if (cfg.uses_dropout()) {
        auto [masked, mask] = dropout_apply(flat, p, dropout_rng);
        flat = std::move(masked);
        cache.fc_dropout_mask = std::move(mask);
    }
    cache.fc_input = flat;

    const DenseWeights* used_fc = &fc_;
    if (cfg.masks_fc_params()) {
        auto [masked, masks] = dropfilter_mask(fc_, p, filter_rng);
        cache.masked_fc = std::move(masked);
        cache.fc_param_masks = std::move(masks);
        used_fc = &*cache.masked_fc;
    }
    return fc_forward(cache.fc_input, *used_fc);
}

Tensor Network::forward_eval(const Tensor& batch, const RegularizerConfig& cfg) const {
    cfg.validate();
    const double keep = cfg.retention();
    const bool combined_dropout = cfg.uses_dropout() && cfg.method != Method::dropout;

    const bool dfplus_active = cfg.uses_dropfilter_plus() && cfg.drop_rate > 0.0;
    Tensor x = batch;
    for (const ConvLayer& layer : convs_) {
        const FilterBank scaled = test_time_scale(layer.params, cfg);
        Tensor a = conv2d_forward(x, scaled, layer.spec.stride, layer.spec.pad);
        if (dfplus_active && cfg.dfplus_mask_pre_activation) {
            scale_inplace(a, kUniformMaskMean);
        }
        Tensor z = relu(a);
        if (dfplus_active && !cfg.dfplus_mask_pre_activation) {
            scale_inplace(z, kUniformMaskMean);
        }
        if (layer.spec.pool) z = maxpool2(z).output;
        if (combined_dropout) scale_inplace(z, keep);
        x = std::move(z);
    }
    Tensor flat = reshaped(x, {x.extent(0), flattened_dim()});
    if (cfg.uses_dropout()) scale_inplace(flat, keep);
    return fc_forward(flat, test_time_scale(fc_, cfg));
}

Network::Grads Network::backward(const TrainCache& cache, const Tensor& grad_logits,
                                 const RegularizerConfig& cfg) const {
    Grads grads;
    grads.conv.resize(convs_.size());

    const DenseWeights& used_fc = cache.masked_fc ? *cache.masked_fc : fc_;
    grads.fc = fc_backward(cache.fc_input, used_fc, grad_logits);

    Tensor g = std::move(grads.fc.grad_input);
    if (cache.fc_dropout_mask) mul_inplace(g, *cache.fc_dropout_mask);

    for (std::size_t li = convs_.size(); li-- > 0;) {
        const ConvCache& cc = cache.conv[li];
        if (li + 1 == convs_.size()) {
            // undo the flatten
            std::size_t hh = convs_[li].out_h, ww = convs_[li].out_w;
            if (convs_[li].spec.pool) {
                hh /= 2;
                ww /= 2;
            }
            g = reshaped(g, {g.extent(0), convs_[li].spec.out_channels, hh, ww});
        }
        if (cc.dropout_mask) mul_inplace(g, *cc.dropout_mask);
        if (cc.pool) g = maxpool2_backward(*cc.pool, g);
        if (cc.dfplus_mask && !cfg.dfplus_mask_pre_activation) mul_inplace(g, *cc.dfplus_mask);
        g = relu_backward(cc.relu_input, g);
        if (cc.dfplus_mask && cfg.dfplus_mask_pre_activation) mul_inplace(g, *cc.dfplus_mask);

        const FilterBank& used = cc.masked_params ? *cc.masked_params : convs_[li].params;
        grads.conv[li] = detail::conv2d_backward_cols(cc.cols, used, g, cc.dims);
        g = std::move(grads.conv[li].grad_input);
    }
    return grads;
}

void Network::sgd_step(Grads grads, const std::vector<std::optional<MaskSet>>& conv_masks,
                       const std::optional<MaskSet>& fc_mask, double lr) {
    if (grads.conv.size() != convs_.size()) {
        throw ShapeError("sgd_step grads/layer count mismatch");
    }
    if (!conv_masks.empty() && conv_masks.size() != convs_.size()) {
        throw ShapeError("sgd_step mask/layer count mismatch");
    }
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        LayerGrads& lg = grads.conv[i];
        if (!conv_masks.empty() && conv_masks[i]) {
            lg = dropfilter_grad_postprocess(std::move(lg), *conv_masks[i]);
        }
        axpy_inplace(convs_[i].params.weights, -lr, lg.grad_weights);
        axpy_inplace(convs_[i].params.bias, -lr, lg.grad_bias);
    }
    LayerGrads& fg = grads.fc;
    if (fc_mask) fg = dropfilter_grad_postprocess(std::move(fg), *fc_mask);
    axpy_inplace(fc_.weights, -lr, fg.grad_weights);
    axpy_inplace(fc_.bias, -lr, fg.grad_bias);
    ++iteration_;
}

std::size_t Network::param_count() const {
    std::size_t n = fc_.weights.size() + fc_.bias.size();
    for (const ConvLayer& layer : convs_) {
        n += layer.params.weights.size() + layer.params.bias.size();
    }
    return n;
}

std::vector<double> Network::parameters() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const ConvLayer& layer : convs_) {
        const auto& w = layer.params.weights.values();
        const auto& b = layer.params.bias.values();
        flat.insert(flat.end(), w.begin(), w.end());
        flat.insert(flat.end(), b.begin(), b.end());
    }
    flat.insert(flat.end(), fc_.weights.values().begin(), fc_.weights.values().end());
    flat.insert(flat.end(), fc_.bias.values().begin(), fc_.bias.values().end());
    return flat;
}

void Network::set_parameters(std::span<const double> flat) {
    if (flat.size() != param_count()) {
        throw ShapeError("set_parameters: expected " + std::to_string(param_count()) +
                         " values, got " + std::to_string(flat.size()));
    }
    std::size_t off = 0;
    auto take = [&](Tensor& dst) {
        std::memcpy(dst.data(), flat.data() + off, dst.size() * sizeof(double));
        off += dst.size();
    };
    for (ConvLayer& layer : convs_) {
        take(layer.params.weights);
        take(layer.params.bias);
    }
    take(fc_.weights);
    take(fc_.bias);
}

std::vector<double> Network::flatten_grads(const Grads& grads) {
    std::vector<double> flat;
    for (const LayerGrads& lg : grads.conv) {
        flat.insert(flat.end(), lg.grad_weights.values().begin(), lg.grad_weights.values().end());
        flat.insert(flat.end(), lg.grad_bias.values().begin(), lg.grad_bias.values().end());
    }
    flat.insert(flat.end(), grads.fc.grad_weights.values().begin(),
                grads.fc.grad_weights.values().end());
    flat.insert(flat.end(), grads.fc.grad_bias.values().begin(), grads.fc.grad_bias.values().end());
    return flat;
}

} // namespace dropfilter
