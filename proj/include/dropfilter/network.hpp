#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dropfilter/layers.hpp"
#include "dropfilter/regularizers.hpp"
#include "dropfilter/rng.hpp"

namespace dropfilter {

struct ConvLayerSpec {
    std::size_t out_channels;
    std::size_t kernel;
    std::size_t stride = 1;
    std::size_t pad = 0;
    bool pool = false; // 2x2 max pool after the activation
};

struct InputShape {
    std::size_t channels, height, width;
};

// Stack of conv(+ReLU, optional pool) layers followed by one fully-connected
// classifier. Holds the parameters and the iteration counter; the training
// loop drives forward/backward/update.
class Network {
public:
    // weights ~ N(0, 2/fan_in), biases zero, drawn from init_rng layer by
    // layer (conv weights, then the next layer, ..., then fc weights)
    Network(InputShape input, std::vector<ConvLayerSpec> convs, std::size_t num_classes,
            RandomSource& init_rng);

    struct ConvLayer {
        ConvLayerSpec spec;
        FilterBank params;
        std::size_t out_h = 0, out_w = 0; // after conv, before pool
    };

    // per-batch state retained from the train forward pass
    struct ConvCache {
        detail::ConvDims dims;
        std::vector<double> cols;
        std::optional<FilterBank> masked_params;
        std::optional<MaskSet> param_masks;
        Tensor relu_input;
        std::optional<Mask> dfplus_mask;
        std::optional<PoolResult> pool;
        std::optional<Mask> dropout_mask; // combined modes: after the block
    };
    struct TrainCache {
        std::vector<ConvCache> conv;
        Tensor fc_input; // after flatten and (optional) dropout
        std::optional<Mask> fc_dropout_mask;
        std::optional<DenseWeights> masked_fc;
        std::optional<MaskSet> fc_param_masks;
    };
    struct Grads {
        std::vector<LayerGrads> conv;
        LayerGrads fc;
    };

    // Training-mode forward. Masks are drawn in a fixed order: per conv layer
    // (parameter masks, then the output mask where applicable), then the
    // fc-input dropout mask, then fc parameter masks. Activation masks come
    // from dropout_rng, parameter/output masks from filter_rng.
    Tensor forward_train(const Tensor& batch, const RegularizerConfig& cfg,
                         RandomSource& dropout_rng, RandomSource& filter_rng,
                         TrainCache& cache) const;

    // Evaluation-mode forward: no randomness; every training-time mask point
    // is replaced by the mask's expected value (1-p for Bernoulli masks, 0.5
    // for the uniform output mask), via test_time_scale for parameters and
    // on-the-fly scaling for activations.
    Tensor forward_eval(const Tensor& batch, const RegularizerConfig& cfg) const;

    Grads backward(const TrainCache& cache, const Tensor& grad_logits,
                   const RegularizerConfig& cfg) const;

    // Mask-postprocess (where masks are provided) and SGD update:
    // params <- params - lr * (mask . grad); bumps the iteration counter.
    void sgd_step(Grads grads, const std::vector<std::optional<MaskSet>>& conv_masks,
                  const std::optional<MaskSet>& fc_mask, double lr);

    const std::vector<ConvLayer>& conv_layers() const { return convs_; }
    const DenseWeights& fc() const { return fc_; }
    InputShape input_shape() const { return input_; }
    std::size_t num_classes() const { return fc_.out_dim(); }
    std::size_t flattened_dim() const { return fc_.in_dim(); }
    std::uint64_t iteration() const { return iteration_; }

    std::size_t param_count() const;
    // concatenated parameters, conv layers first (weights then bias), fc last
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);
    static std::vector<double> flatten_grads(const Grads& grads);

private:
    InputShape input_;
    std::vector<ConvLayer> convs_;
    DenseWeights fc_;
    std::uint64_t iteration_ = 0;
};

} // namespace dropfilter
