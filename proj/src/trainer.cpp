#include "dropfilter/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>

namespace dropfilter {

void TrainConfig::validate() const {
    if (epochs < 1) throw ValueError("epochs must be >= 1");
    if (batch_size < 1) throw ValueError("batch_size must be >= 1");
    if (!(init_lr > 0.0)) throw ValueError("init_lr must be positive");
    if (halve_every < 1) throw ValueError("halve_every must be >= 1");
    reg.validate();
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 1) throw ValueError("epoch is 1-based");
    const int halvings = (epoch - 1) / cfg.halve_every;
    return cfg.init_lr * std::pow(0.5, halvings);
}

Dataset Dataset::subset(std::size_t n) const {
    if (n == 0 || n > size()) {
        throw ValueError("subset size must be in [1," + std::to_string(size()) + "]");
    }
    Dataset out;
    out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
    const std::size_t sample = images.size() / images.extent(0);
    std::vector<std::size_t> shape = images.shape();
    shape[0] = n;
    out.images = Tensor(std::move(shape),
                        std::vector<double>(images.values().begin(),
                                            images.values().begin() +
                                                static_cast<std::ptrdiff_t>(n * sample)));
    return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, RandomSource& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    // Fisher-Yates, top down
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

Tensor gather_batch(const Dataset& data, const std::vector<std::size_t>& order, std::size_t first,
                    std::size_t count, std::vector<int>& labels_out) {
    const std::size_t sample = data.images.size() / data.images.extent(0);
    std::vector<std::size_t> shape = data.images.shape();
    shape[0] = count;
    Tensor batch(std::move(shape));
    labels_out.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t src = order[first + i];
        std::memcpy(batch.data() + i * sample, data.images.data() + src * sample,
                    sample * sizeof(double));
        labels_out[i] = data.labels[src];
    }
    return batch;
}

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
    const std::size_t classes = logits.extent(1);
    const double* r = logits.data() + row * classes;
    std::size_t best = 0;
    for (std::size_t j = 1; j < classes; ++j) {
        if (r[j] > r[best]) best = j;
    }
    return best;
}

Trainer::Trainer(Network net, TrainConfig cfg)
    : net_(std::move(net)),
      cfg_(cfg),
      shuffle_rng_(derive_seed(cfg.seed, 1)),
      dropout_rng_(derive_seed(cfg.seed, 2)),
      filter_rng_(derive_seed(cfg.seed, 3)) {
    cfg_.validate();
}

MetricsRecord Trainer::train_epoch(const Dataset& train, const Dataset& test, int epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_schedule(epoch, cfg_);
    const std::size_t n = train.size();
    if (n < cfg_.batch_size) {
        throw ValueError("training set smaller than one batch (" + std::to_string(n) + " < " +
                         std::to_string(cfg_.batch_size) + ")");
    }
    const std::vector<std::size_t> order = shuffled_indices(n, shuffle_rng_);
    const std::size_t num_batches = n / cfg_.batch_size; // partial tail dropped

    double loss_sum = 0.0;
    std::size_t train_wrong = 0, train_seen = 0;
    std::vector<int> labels;
    Network::TrainCache cache; // workspaces inside are reused across batches
    for (std::size_t b = 0; b < num_batches; ++b) {
        Tensor batch = gather_batch(train, order, b * cfg_.batch_size, cfg_.batch_size, labels);
        const Tensor logits = net_.forward_train(batch, cfg_.reg, dropout_rng_, filter_rng_, cache);
        const XentResult xent = softmax_xent(logits, labels);
        if (!std::isfinite(xent.loss)) {
            throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) +
                                  ", iteration " + std::to_string(net_.iteration()) +
                                  " (method " + to_string(cfg_.reg.method) + ", lr " +
                                  std::to_string(lr) + ")");
        }
        loss_sum += xent.loss;
        for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
            if (argmax_row(logits, i) != static_cast<std::size_t>(labels[i])) ++train_wrong;
        }
        train_seen += cfg_.batch_size;

        Network::Grads grads = net_.backward(cache, xent.grad_logits, cfg_.reg);

        // assemble the parameter-gradient masks for this step
        std::vector<std::optional<MaskSet>> conv_masks;
        std::optional<MaskSet> fc_mask;
        if (cfg_.reg.uses_dropfilter()) {
            conv_masks.resize(cache.conv.size());
            for (std::size_t i = 0; i < cache.conv.size(); ++i) {
                conv_masks[i] = cache.conv[i].param_masks;
            }
        } else if (cfg_.reg.uses_dropfilter_plus()) {
            conv_masks.resize(cache.conv.size());
            for (std::size_t i = 0; i < cache.conv.size(); ++i) {
                // n = number of filter placements on this layer's output
                conv_masks[i] = dfplus_grad_masks(net_.conv_layers()[i].params, cfg_.reg.drop_rate,
                                                  cache.conv[i].dims.out_spatial(), filter_rng_);
            }
        }
        if (cache.fc_param_masks) fc_mask = cache.fc_param_masks;
        net_.sgd_step(std::move(grads), conv_masks, fc_mask, lr);
    }

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.mean_train_loss = loss_sum / static_cast<double>(num_batches);
    rec.train_error = static_cast<double>(train_wrong) / static_cast<double>(train_seen);
    rec.test_error = evaluate(test);
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

double Trainer::evaluate(const Dataset& test) const {
    const std::size_t n = test.size();
    if (n == 0) throw ValueError("empty evaluation set");
    const std::size_t chunk = 100; // keeps the conv workspaces batch-sized
    std::size_t wrong = 0;
    std::vector<int> labels;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t first = 0; first < n; first += chunk) {
        const std::size_t count = std::min(chunk, n - first);
        Tensor batch = gather_batch(test, order, first, count, labels);
        const Tensor logits = net_.forward_eval(batch, cfg_.reg);
        for (std::size_t i = 0; i < count; ++i) {
            if (argmax_row(logits, i) != static_cast<std::size_t>(labels[i])) ++wrong;
        }
    }
    return static_cast<double>(wrong) / static_cast<double>(n);
}

std::uint64_t Trainer::total_draws() const {
    return shuffle_rng_.draw_count() + dropout_rng_.draw_count() + filter_rng_.draw_count();
}

} // namespace dropfilter
