#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "dropfilter/layers.hpp"
#include "dropfilter/rng.hpp"
#include "dropfilter/tensor.hpp"

namespace dropfilter {

enum class Method {
    none,
    dropout,
    dropconnect,
    dropfilter,
    dropfilter_plus,
    dropout_and_dropfilter,
    dropout_and_dropfilter_plus,
};

Method parse_method(std::string_view name); // unknown name -> ValueError
std::string to_string(Method m);
const std::vector<Method>& all_methods();

struct RegularizerConfig {
    Method method = Method::none;
    double drop_rate = 0.5;
    // apply the DropFilter-PLUS output mask to the pre-activation instead of
    // the activation output
    bool dfplus_mask_pre_activation = false;
    // one shared shrink factor per feature-map column instead of per element
    bool dfplus_per_column_mask = false;

    void validate() const;
    double retention() const { return 1.0 - drop_rate; }

    // which ingredients the method uses
    bool uses_dropout() const;
    bool uses_dropfilter() const;        // Bernoulli masks on conv parameters
    bool uses_dropfilter_plus() const;   // uniform output mask + normal grad masks
    bool masks_fc_params() const;        // Bernoulli masks on the FC layer
};

enum class MaskGeneration { bernoulli, normal, uniform_output };

// Masks for one parameter set, retained between forward and backward.
struct MaskSet {
    Mask filter_mask;
    Mask bias_mask;
    MaskGeneration generation = MaskGeneration::bernoulli;
};

// Bernoulli(1-p) mask on activations; masked = activations * mask.
// The returned mask gates grad_activations in the backward pass.
std::pair<Tensor, Mask> dropout_apply(const Tensor& activations, double p, RandomSource& rng);

// Bernoulli(1-p) masks on dense weights and bias (weights drawn first, then
// bias, each in row-major element order).
std::pair<DenseWeights, MaskSet> dropconnect_mask(const DenseWeights& params, double p,
                                                  RandomSource& rng);

// Bernoulli(1-p) masks on convolution filters and bias; same draw order as
// dropconnect_mask, so DropFilter on a dense layer is DropConnect exactly.
std::pair<FilterBank, MaskSet> dropfilter_mask(const FilterBank& filters, double p,
                                               RandomSource& rng);
std::pair<DenseWeights, MaskSet> dropfilter_mask(const DenseWeights& params, double p,
                                                 RandomSource& rng);

// grad_weights <- mask * grad_weights, grad_bias <- mask * grad_bias;
// grad_input passes through untouched.
LayerGrads dropfilter_grad_postprocess(LayerGrads grads, const MaskSet& masks);

// Uniform[0,1) multiplicative mask on the layer output (the DropFilter-PLUS
// forward acceleration). per_column shares one factor per feature-map column.
std::pair<Tensor, Mask> dfplus_forward_mask(const Tensor& layer_output, RandomSource& rng,
                                            bool per_column = false);

// Gradient masks ~ N(1-p, p(1-p)/n) shaped like the filter parameters;
// n is the number of filter placements (outH * outW) of the layer.
MaskSet dfplus_grad_masks(const FilterBank& filters, double p, std::size_t n, RandomSource& rng);

// Literal per-position reference: draws a fresh Bernoulli(1-p) filter mask and
// bias mask for every output position. Pre-activation output (no nonlinearity).
// Intended for small test instances; cost grows with every output element.
Tensor perposition_masked_conv_oracle(const Tensor& input, const FilterBank& filters, double p,
                                      RandomSource& rng, std::size_t stride = 1,
                                      std::size_t pad = 0);

// Evaluation-time parameter scaling: parameters that were Bernoulli-masked
// during training are multiplied by the retention probability 1-p.
// Conv parameters are masked by the dropfilter methods; dense parameters by
// dropconnect and by the standalone dropfilter methods (which degenerate to
// DropConnect on a fully-connected layer).
FilterBank test_time_scale(const FilterBank& params, const RegularizerConfig& cfg);
DenseWeights test_time_scale(const DenseWeights& params, const RegularizerConfig& cfg);

} // namespace dropfilter
