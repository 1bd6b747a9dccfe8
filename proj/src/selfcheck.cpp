#include "dropfilter/selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>

#include "dropfilter/experiment.hpp"
#include "dropfilter/gradcheck.hpp"
#include "dropfilter/layers.hpp"
#include "dropfilter/network.hpp"
#include "dropfilter/regularizers.hpp"
#include "dropfilter/rng.hpp"

namespace dropfilter {

namespace {

constexpr std::uint64_t kCheckSeed = 20240601;

CheckResult make_result(std::string name, bool passed, std::string detail) {
    return CheckResult{std::move(name), passed, std::move(detail)};
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), format, a, b, c);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

CheckResult check_rng_determinism() {
    RandomSource a(42), b(42), c(43);
    bool same = true, differ = false;
    for (int i = 0; i < 100; ++i) {
        const double ua = a.next_uniform(), ub = b.next_uniform(), uc = c.next_uniform();
        same = same && (ua == ub);
        differ = differ || (ua != uc);
    }
    RandomSource zero(0);
    bool zero_ok = false;
    const double first = zero.next_uniform();
    for (int i = 0; i < 100; ++i) zero_ok = zero_ok || zero.next_uniform() != first;
    const bool ok = same && differ && zero_ok;
    return make_result("rng determinism (equal seeds match, unequal differ, seed 0 valid)", ok,
                       ok ? "" : "stream comparison failed");
}

CheckResult check_bernoulli_stats() {
    RandomSource rng(kCheckSeed);
    std::ostringstream detail;
    bool ok = true;
    for (double p : {0.25, 0.5, 0.75}) {
        const Mask m = sample_bernoulli_mask(rng, {10000}, 1.0 - p);
        std::size_t zeros = 0;
        for (double v : m.values()) zeros += v == 0.0 ? 1 : 0;
        const double frac = static_cast<double>(zeros) / 10000.0;
        const double bound = 3.0 * std::sqrt(p * (1.0 - p) / 10000.0);
        const bool pass = std::abs(frac - p) <= bound;
        ok = ok && pass;
        detail << "p=" << p << " drop=" << frac << " bound=+-" << bound << "; ";
    }
    return make_result("Bernoulli drop fraction within 3 sigma (p=0.25/0.5/0.75, 10k)", ok,
                       detail.str());
}

CheckResult check_uniform_stats() {
    RandomSource rng(kCheckSeed + 1);
    const Mask m = sample_uniform_mask(rng, {100000});
    bool in_range = true;
    for (double v : m.values()) in_range = in_range && v >= 0.0 && v < 1.0;
    const double mean = mean_of(m.values());
    const double var = variance_of(m.values());
    const bool mean_ok = mean >= 0.49726 && mean <= 0.50274; // 3 sigma of sqrt(1/12)/sqrt(1e5)
    const bool var_ok = std::abs(var - 1.0 / 12.0) <= 0.1 / 12.0;
    const bool ok = in_range && mean_ok && var_ok;
    return make_result("uniform mask range/mean/variance (100k elements)", ok,
                       fmt("mean=%.5f var=%.5f", mean, var));
}

CheckResult check_normal_stats() {
    RandomSource rng(kCheckSeed + 2);
    const Mask exact = sample_normal_mask(rng, {64}, 0.5, 0.0);
    bool exact_ok = true;
    for (double v : exact.values()) exact_ok = exact_ok && v == 0.5;

    // N(0.5, 0.25/49284): the 222x222-placement case
    const double sd_expect = 0.5 / 222.0;
    const Mask m = sample_normal_mask(rng, {10000}, 0.5, 0.25 / 49284.0);
    const double sd = std::sqrt(variance_of(m.values()));
    const double mean = mean_of(m.values());
    const bool sd_ok = std::abs(sd - sd_expect) <= 0.1 * sd_expect;
    const bool mean_ok = std::abs(mean - 0.5) <= 3.0 * sd_expect / 100.0;
    const bool ok = exact_ok && sd_ok && mean_ok;
    return make_result("normal mask: zero variance exact, std/mean of N(0.5, 0.25/49284)", ok,
                       fmt("std=%.6f (expect %.6f), mean=%.6f", sd, sd_expect, mean));
}

CheckResult check_clt_consistency() {
    // averaging n Bernoulli(1-p) masks matches the N(1-p, p(1-p)/n) model
    RandomSource rng(kCheckSeed + 3);
    const double p = 0.5;
    const std::size_t elements = 4096;
    std::ostringstream detail;
    bool ok = true;
    for (std::size_t n : {std::size_t{16}, std::size_t{256}}) {
        std::vector<double> avg(elements, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const Mask m = sample_bernoulli_mask(rng, {elements}, 1.0 - p);
            for (std::size_t e = 0; e < elements; ++e) avg[e] += m[e];
        }
        for (double& v : avg) v /= static_cast<double>(n);
        const double want_var = p * (1.0 - p) / static_cast<double>(n);
        const double mean = mean_of(avg);
        const double var = variance_of(avg);
        const double mean_bound = 3.0 * std::sqrt(want_var) / std::sqrt(double(elements));
        const bool pass =
            std::abs(mean - (1.0 - p)) <= mean_bound && std::abs(var - want_var) <= 0.2 * want_var;
        ok = ok && pass;
        detail << "n=" << n << " mean=" << mean << " var=" << var << " (want " << want_var
               << "); ";
    }
    return make_result("CLT: averaged Bernoulli masks match N(1-p, p(1-p)/n), n=16/256", ok,
                       detail.str());
}

CheckResult check_oracle_expectation() {
    RandomSource data_rng(kCheckSeed + 4);
    Tensor input({1, 1, 6, 6});
    fill_uniform(data_rng, std::span<double>(input.values()));
    FilterBank filters;
    filters.weights = Tensor({1, 1, 3, 3});
    filters.bias = Tensor({1});
    fill_normal(data_rng, std::span<double>(filters.weights.values()), 0.0, 1.0);
    filters.bias[0] = 0.3;
    const Tensor plain = conv2d_forward(input, filters);

    bool ok = true;
    std::ostringstream detail;
    for (double p : {0.25, 0.5, 0.75}) {
        RandomSource rng(kCheckSeed + 5);
        const std::size_t trials = 10000;
        std::vector<double> sum(plain.size(), 0.0), sumsq(plain.size(), 0.0);
        for (std::size_t t = 0; t < trials; ++t) {
            const Tensor out = perposition_masked_conv_oracle(input, filters, p, rng);
            for (std::size_t i = 0; i < out.size(); ++i) {
                sum[i] += out[i];
                sumsq[i] += out[i] * out[i];
            }
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < plain.size(); ++i) {
            const double mean = sum[i] / trials;
            const double var = (sumsq[i] - sum[i] * sum[i] / trials) / (trials - 1);
            const double se = std::sqrt(var / trials);
            const double target = (1.0 - p) * plain[i];
            const double sigmas = se > 0.0 ? std::abs(mean - target) / se : 0.0;
            worst = std::max(worst, sigmas);
        }
        ok = ok && worst <= 3.0;
        detail << "p=" << p << " worst=" << fmt("%.2f", worst) << " sigma; ";
    }
    return make_result("per-position oracle mean = (1-p) * plain conv (10k trials)", ok,
                       detail.str());
}

CheckResult check_degenerate_p() {
    RandomSource data_rng(kCheckSeed + 6);
    Tensor input({2, 1, 6, 6});
    fill_normal(data_rng, std::span<double>(input.values()), 0.0, 1.0);
    RandomSource init_rng(kCheckSeed + 7);
    const std::vector<ConvLayerSpec> arch = {
        {.out_channels = 3, .kernel = 3, .stride = 1, .pad = 0, .pool = true}};
    Network net({.channels = 1, .height = 6, .width = 6}, arch, 4, init_rng);

    RegularizerConfig none;
    const Tensor baseline = net.forward_eval(input, none);

    bool ok = true;
    std::ostringstream detail;
    for (Method method : {Method::dropout, Method::dropconnect, Method::dropfilter,
                          Method::dropfilter_plus}) {
        RegularizerConfig cfg;
        cfg.method = method;
        cfg.drop_rate = 0.0;
        RandomSource drop_rng(kCheckSeed + 8), filt_rng(kCheckSeed + 9);
        Network::TrainCache cache;
        const Tensor out = net.forward_train(input, cfg, drop_rng, filt_rng, cache);
        bool same = out.same_shape(baseline);
        if (same) {
            for (std::size_t i = 0; i < out.size(); ++i) same = same && out[i] == baseline[i];
        }
        ok = ok && same;
        if (!same) detail << to_string(method) << " differs at p=0; ";
    }

    // p=1 dropfilter: every parameter dropped -> f(0)
    RegularizerConfig df1;
    df1.method = Method::dropfilter;
    df1.drop_rate = 1.0;
    RandomSource drop_rng(kCheckSeed + 10), filt_rng(kCheckSeed + 11);
    Network::TrainCache cache;
    const Tensor out = net.forward_train(input, df1, drop_rng, filt_rng, cache);
    bool zeros = true;
    for (double v : out.values()) zeros = zeros && v == 0.0;
    ok = ok && zeros;
    if (!zeros) detail << "dropfilter p=1 output not f(0)";
    return make_result("degenerate drop rates (p=0 reproduces baseline, p=1 gives f(0))", ok,
                       detail.str());
}

CheckResult check_fc_degeneracy() {
    RandomSource init_rng(kCheckSeed + 12);
    DenseWeights dense;
    dense.weights = Tensor({8, 16});
    dense.bias = Tensor({8});
    fill_normal(init_rng, std::span<double>(dense.weights.values()), 0.0, 0.25);
    fill_normal(init_rng, std::span<double>(dense.bias.values()), 0.0, 0.25);
    Tensor input({4, 16});
    fill_normal(init_rng, std::span<double>(input.values()), 0.0, 1.0);

    RandomSource rng_a(kCheckSeed + 13), rng_b(kCheckSeed + 13);
    const auto [dc_params, dc_masks] = dropconnect_mask(dense, 0.5, rng_a);
    const auto [df_params, df_masks] = dropfilter_mask(dense, 0.5, rng_b);
    const Tensor out_dc = fc_forward(input, dc_params);
    const Tensor out_df = fc_forward(input, df_params);
    bool ok = rng_a.draw_count() == rng_b.draw_count();
    for (std::size_t i = 0; i < out_dc.size(); ++i) ok = ok && out_dc[i] == out_df[i];
    for (std::size_t i = 0; i < dc_masks.filter_mask.size(); ++i) {
        ok = ok && dc_masks.filter_mask[i] == df_masks.filter_mask[i];
    }
    return make_result("DropFilter on a dense layer equals DropConnect bit-exactly", ok,
                       ok ? "" : "outputs or masks differ");
}

CheckResult check_dfplus_forward_mask() {
    RandomSource rng(kCheckSeed + 14);
    const Tensor ones = Tensor::full({100000}, 1.0);
    const auto [masked, mask] = dfplus_forward_mask(ones, rng);
    const double mean = mean_of(masked.values());
    bool shrink = true;
    for (std::size_t i = 0; i < masked.size(); ++i) {
        shrink = shrink && masked[i] <= ones[i] && masked[i] >= 0.0;
    }
    const bool ok = shrink && std::abs(mean - 0.5) <= 0.00274;
    return make_result("dfplus uniform output mask: shrinkage and mean 0.5 (100k)", ok,
                       fmt("mean=%.5f", mean));
}

CheckResult check_eval_consumes_no_draws() {
    RandomSource data_rng(kCheckSeed + 15);
    Tensor images({64, 1, 8, 8});
    fill_uniform(data_rng, std::span<double>(images.values()));
    Dataset set;
    set.images = images;
    for (std::size_t i = 0; i < 64; ++i) set.labels.push_back(static_cast<int>(i % 4));

    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 16;
    cfg.reg.method = Method::dropfilter_plus;
    cfg.seed = kCheckSeed;
    RandomSource init_rng(derive_seed(cfg.seed, 0));
    Network net({.channels = 1, .height = 8, .width = 8},
                {{.out_channels = 3, .kernel = 3, .stride = 1, .pad = 0, .pool = true}}, 4,
                init_rng);
    Trainer trainer(std::move(net), cfg);
    const std::uint64_t before = trainer.total_draws();
    const double err1 = trainer.evaluate(set);
    const double err2 = trainer.evaluate(set);
    const bool ok = trainer.total_draws() == before && err1 == err2;
    return make_result("evaluation consumes no random draws and is repeatable", ok,
                       fmt("err=%.4f", err1));
}

// ---- gradient checks ----

struct GradCheckCase {
    std::string name;
    double worst = 0.0;
    double tolerance = 1e-4;
    bool passed() const { return worst < tolerance; }
};

// loss = sum(projection * conv_out); checks weights, bias and input grads
GradCheckCase gradcheck_conv(std::uint64_t seed, std::size_t trials) {
    GradCheckCase result{"conv2d backward vs finite differences"};
    for (std::size_t t = 0; t < trials; ++t) {
        RandomSource rng(seed + t);
        const std::size_t n = 1 + rng.next_u64() % 2, in_c = 1 + rng.next_u64() % 3,
                          out_c = 1 + rng.next_u64() % 3, k = 1 + rng.next_u64() % 3;
        const std::size_t h = k + rng.next_u64() % (9 - k), w = k + rng.next_u64() % (9 - k);
        const std::size_t stride = 1 + rng.next_u64() % 2, pad = rng.next_u64() % 2;

        Tensor input({n, in_c, h, w});
        fill_normal(rng, std::span<double>(input.values()), 0.0, 1.0);
        FilterBank fb;
        fb.weights = Tensor({out_c, in_c, k, k});
        fb.bias = Tensor({out_c});
        fill_normal(rng, std::span<double>(fb.weights.values()), 0.0, 1.0);
        fill_normal(rng, std::span<double>(fb.bias.values()), 0.0, 1.0);
        const Tensor out = conv2d_forward(input, fb, stride, pad);
        Tensor projection(out.shape());
        fill_normal(rng, std::span<double>(projection.values()), 0.0, 1.0);

        const std::size_t nw = fb.weights.size(), nb = fb.bias.size(), ni = input.size();
        std::vector<double> params;
        params.insert(params.end(), fb.weights.values().begin(), fb.weights.values().end());
        params.insert(params.end(), fb.bias.values().begin(), fb.bias.values().end());
        params.insert(params.end(), input.values().begin(), input.values().end());

        auto loss = [&](const std::vector<double>& x) {
            FilterBank f2;
            f2.weights = Tensor(fb.weights.shape(),
                                std::vector<double>(x.begin(), x.begin() + nw));
            f2.bias = Tensor(fb.bias.shape(),
                             std::vector<double>(x.begin() + nw, x.begin() + nw + nb));
            Tensor in2(input.shape(), std::vector<double>(x.begin() + nw + nb, x.end()));
            const Tensor o = conv2d_forward(in2, f2, stride, pad);
            double s = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * projection[i];
            return s;
        };
        const LayerGrads grads = conv2d_backward(input, fb, projection, stride, pad);
        std::vector<double> analytic;
        analytic.reserve(nw + nb + ni);
        analytic.insert(analytic.end(), grads.grad_weights.values().begin(),
                        grads.grad_weights.values().end());
        analytic.insert(analytic.end(), grads.grad_bias.values().begin(),
                        grads.grad_bias.values().end());
        analytic.insert(analytic.end(), grads.grad_input.values().begin(),
                        grads.grad_input.values().end());
        result.worst = std::max(result.worst, finite_diff_check(loss, params, analytic));
    }
    return result;
}

GradCheckCase gradcheck_fc(std::uint64_t seed, std::size_t trials) {
    GradCheckCase result{"fc backward vs finite differences"};
    for (std::size_t t = 0; t < trials; ++t) {
        RandomSource rng(seed + 1000 + t);
        const std::size_t n = 1 + rng.next_u64() % 4, in_dim = 1 + rng.next_u64() % 8,
                          out_dim = 1 + rng.next_u64() % 8;
        Tensor input({n, in_dim});
        fill_normal(rng, std::span<double>(input.values()), 0.0, 1.0);
        DenseWeights dw;
        dw.weights = Tensor({out_dim, in_dim});
        dw.bias = Tensor({out_dim});
        fill_normal(rng, std::span<double>(dw.weights.values()), 0.0, 1.0);
        fill_normal(rng, std::span<double>(dw.bias.values()), 0.0, 1.0);
        Tensor projection({n, out_dim});
        fill_normal(rng, std::span<double>(projection.values()), 0.0, 1.0);

        const std::size_t nw = dw.weights.size(), nb = dw.bias.size();
        std::vector<double> params;
        params.insert(params.end(), dw.weights.values().begin(), dw.weights.values().end());
        params.insert(params.end(), dw.bias.values().begin(), dw.bias.values().end());
        params.insert(params.end(), input.values().begin(), input.values().end());
        auto loss = [&](const std::vector<double>& x) {
            DenseWeights d2;
            d2.weights =
                Tensor(dw.weights.shape(), std::vector<double>(x.begin(), x.begin() + nw));
            d2.bias =
                Tensor(dw.bias.shape(), std::vector<double>(x.begin() + nw, x.begin() + nw + nb));
            Tensor in2(input.shape(), std::vector<double>(x.begin() + nw + nb, x.end()));
            const Tensor o = fc_forward(in2, d2);
            double s = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * projection[i];
            return s;
        };
        const LayerGrads grads = fc_backward(input, dw, projection);
        std::vector<double> analytic;
        analytic.insert(analytic.end(), grads.grad_weights.values().begin(),
                        grads.grad_weights.values().end());
        analytic.insert(analytic.end(), grads.grad_bias.values().begin(),
                        grads.grad_bias.values().end());
        analytic.insert(analytic.end(), grads.grad_input.values().begin(),
                        grads.grad_input.values().end());
        result.worst = std::max(result.worst, finite_diff_check(loss, params, analytic));
    }
    return result;
}

// full small network (conv+pool+relu+fc+softmax), relu inputs kept away from
// the kink by resampling
GradCheckCase gradcheck_network(std::uint64_t seed, std::size_t trials) {
    GradCheckCase result{"conv/relu/pool/fc network loss vs finite differences"};
    std::size_t done = 0;
    std::uint64_t attempt = 0;
    while (done < trials && attempt < trials * 20) {
        RandomSource rng(seed + 2000 + attempt++);
        RandomSource init_rng(rng.next_u64());
        Network net({.channels = 2, .height = 6, .width = 6},
                    {{.out_channels = 3, .kernel = 3, .stride = 1, .pad = 1, .pool = true}}, 3,
                    init_rng);
        Tensor batch({2, 2, 6, 6});
        fill_normal(rng, std::span<double>(batch.values()), 0.0, 1.0);
        const std::vector<int> labels = {static_cast<int>(rng.next_u64() % 3),
                                         static_cast<int>(rng.next_u64() % 3)};

        // margin filtering: keep instances whose relu inputs are safely
        // non-zero so the central difference never crosses the kink
        RegularizerConfig none;
        Network::TrainCache cache;
        RandomSource unused_a(0), unused_b(0);
        net.forward_train(batch, none, unused_a, unused_b, cache);
        bool margin_ok = true;
        for (double v : cache.conv[0].relu_input.values()) {
            margin_ok = margin_ok && std::abs(v) > 1e-3;
        }
        if (!margin_ok) continue;

        const std::vector<double> params = net.parameters();
        auto loss = [&](const std::vector<double>& x) {
            Network n2 = net;
            n2.set_parameters(x);
            RandomSource ra(0), rb(0);
            Network::TrainCache c2;
            const Tensor logits = n2.forward_train(batch, none, ra, rb, c2);
            return softmax_xent(logits, labels).loss;
        };
        Network::TrainCache c3;
        RandomSource ra(0), rb(0);
        const Tensor logits = net.forward_train(batch, none, ra, rb, c3);
        const XentResult xent = softmax_xent(logits, labels);
        const Network::Grads grads = net.backward(c3, xent.grad_logits, none);
        result.worst =
            std::max(result.worst, finite_diff_check(loss, params, Network::flatten_grads(grads)));
        ++done;
    }
    return result;
}

// DropFilter with a frozen MaskSet is a deterministic sub-network; its
// postprocessed parameter gradients must be the true gradients of the masked
// forward
GradCheckCase gradcheck_masked_subnetwork(std::uint64_t seed, std::size_t trials) {
    GradCheckCase result{"dropfilter masked sub-network vs finite differences"};
    for (std::size_t t = 0; t < trials; ++t) {
        RandomSource rng(seed + 3000 + t);
        const std::size_t in_c = 1 + rng.next_u64() % 2, out_c = 1 + rng.next_u64() % 3;
        const std::size_t k = 2 + rng.next_u64() % 2;
        const std::size_t h = k + rng.next_u64() % (8 - k), w = k + rng.next_u64() % (8 - k);
        Tensor input({1, in_c, h, w});
        fill_normal(rng, std::span<double>(input.values()), 0.0, 1.0);
        FilterBank fb;
        fb.weights = Tensor({out_c, in_c, k, k});
        fb.bias = Tensor({out_c});
        fill_normal(rng, std::span<double>(fb.weights.values()), 0.0, 1.0);
        fill_normal(rng, std::span<double>(fb.bias.values()), 0.0, 1.0);

        RandomSource mask_rng(seed + 4000 + t);
        const auto [masked_unused, masks] = dropfilter_mask(fb, 0.5, mask_rng);
        const Tensor probe = conv2d_forward(input, fb);
        Tensor projection(probe.shape());
        fill_normal(rng, std::span<double>(projection.values()), 0.0, 1.0);

        const std::size_t nw = fb.weights.size(), nb = fb.bias.size();
        std::vector<double> params;
        params.insert(params.end(), fb.weights.values().begin(), fb.weights.values().end());
        params.insert(params.end(), fb.bias.values().begin(), fb.bias.values().end());
        auto loss = [&](const std::vector<double>& x) {
            FilterBank f2;
            f2.weights =
                Tensor(fb.weights.shape(), std::vector<double>(x.begin(), x.begin() + nw));
            f2.bias = Tensor(fb.bias.shape(), std::vector<double>(x.begin() + nw, x.end()));
            mul_inplace(f2.weights, masks.filter_mask);
            mul_inplace(f2.bias, masks.bias_mask);
            const Tensor o = conv2d_forward(input, f2);
            double s = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * projection[i];
            return s;
        };
        FilterBank masked = fb;
        mul_inplace(masked.weights, masks.filter_mask);
        mul_inplace(masked.bias, masks.bias_mask);
        LayerGrads grads = conv2d_backward(input, masked, projection);
        grads = dropfilter_grad_postprocess(std::move(grads), masks);
        std::vector<double> analytic;
        analytic.insert(analytic.end(), grads.grad_weights.values().begin(),
                        grads.grad_weights.values().end());
        analytic.insert(analytic.end(), grads.grad_bias.values().begin(),
                        grads.grad_bias.values().end());
        result.worst = std::max(result.worst, finite_diff_check(loss, params, analytic));
    }
    return result;
}

GradCheckCase gradcheck_softmax(std::uint64_t seed, std::size_t trials) {
    GradCheckCase result{"softmax cross-entropy vs finite differences"};
    for (std::size_t t = 0; t < trials; ++t) {
        RandomSource rng(seed + 5000 + t);
        const std::size_t n = 1 + rng.next_u64() % 4, classes = 2 + rng.next_u64() % 6;
        Tensor logits({n, classes});
        fill_normal(rng, std::span<double>(logits.values()), 0.0, 2.0);
        std::vector<int> labels(n);
        for (auto& l : labels) l = static_cast<int>(rng.next_u64() % classes);
        auto loss = [&](const std::vector<double>& x) {
            return softmax_xent(Tensor(logits.shape(), x), labels).loss;
        };
        const XentResult xent = softmax_xent(logits, labels);
        result.worst = std::max(
            result.worst, finite_diff_check(loss, logits.values(), xent.grad_logits.values()));
    }
    return result;
}

} // namespace

std::vector<CheckResult> run_property_checks() {
    return {
        check_rng_determinism(),  check_bernoulli_stats(),     check_uniform_stats(),
        check_normal_stats(),     check_clt_consistency(),     check_oracle_expectation(),
        check_degenerate_p(),     check_fc_degeneracy(),       check_dfplus_forward_mask(),
        check_eval_consumes_no_draws(),
    };
}

std::vector<CheckResult> run_gradient_checks() {
    std::vector<CheckResult> results;
    for (const GradCheckCase& c :
         {gradcheck_conv(kCheckSeed, 20), gradcheck_fc(kCheckSeed, 20),
          gradcheck_network(kCheckSeed, 20), gradcheck_masked_subnetwork(kCheckSeed, 20),
          gradcheck_softmax(kCheckSeed, 20)}) {
        results.push_back(make_result(c.name, c.passed(),
                                      fmt("max rel err %.3g (tolerance %.0e)", c.worst,
                                          c.tolerance)));
    }
    return results;
}

int report_checks(const std::vector<CheckResult>& results, std::ostream& out) {
    bool all = true;
    for (const CheckResult& r : results) {
        out << (r.passed ? "PASS" : "FAIL") << "  " << r.name;
        if (!r.detail.empty()) out << "  [" << r.detail << "]";
        out << "\n";
        all = all && r.passed;
    }
    out << (all ? "all checks passed" : "CHECKS FAILED") << "\n";
    return all ? 0 : 1;
}

} // namespace dropfilter
