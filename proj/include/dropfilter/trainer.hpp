#pragma once

#include <cstdint>
#include <vector>

#include "dropfilter/network.hpp"

namespace dropfilter {

struct TrainConfig {
    int epochs = 30;
    std::size_t batch_size = 100;
    double init_lr = 0.002;
    int halve_every = 2; // halve the learning rate every this many epochs
    RegularizerConfig reg;
    std::uint64_t seed = 1;
    std::size_t subset = 0; // use only the first N training samples; 0 = all

    void validate() const;
};

struct MetricsRecord {
    int epoch = 0;
    double mean_train_loss = 0.0;
    double train_error = 0.0;
    double test_error = 0.0;
    double lr = 0.0;
    double wall_time_s = 0.0;
};

// lr = init_lr * 0.5^floor((epoch-1)/halve_every), epoch 1-based
double lr_schedule(int epoch, const TrainConfig& cfg);

struct Dataset {
    Tensor images;           // (N, C, H, W)
    std::vector<int> labels; // size N

    std::size_t size() const { return labels.size(); }
    Dataset subset(std::size_t n) const; // first n samples
};

// Mini-batch SGD driver. Independent random streams are derived from the run
// seed: 0 = parameter init (used by the network builder), 1 = shuffling,
// 2 = dropout activation masks, 3 = parameter/output/gradient masks.
class Trainer {
public:
    Trainer(Network net, TrainConfig cfg);

    // One full pass over train (shuffled, partial tail batch dropped),
    // followed by an evaluation pass over test. Throws DivergenceError on a
    // non-finite training loss.
    MetricsRecord train_epoch(const Dataset& train, const Dataset& test, int epoch);

    // Top-1 error fraction; consumes no random draws.
    double evaluate(const Dataset& test) const;

    Network& network() { return net_; }
    const Network& network() const { return net_; }
    const TrainConfig& config() const { return cfg_; }
    std::uint64_t total_draws() const;

private:
    Network net_;
    TrainConfig cfg_;
    RandomSource shuffle_rng_, dropout_rng_, filter_rng_;
};

// Assemble a contiguous batch from dataset rows [first, first+count) of the
// given index order.
Tensor gather_batch(const Dataset& data, const std::vector<std::size_t>& order, std::size_t first,
                    std::size_t count, std::vector<int>& labels_out);

std::vector<std::size_t> shuffled_indices(std::size_t n, RandomSource& rng);

std::size_t argmax_row(const Tensor& logits, std::size_t row);

} // namespace dropfilter
