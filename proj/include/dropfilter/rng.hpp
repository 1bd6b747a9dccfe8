#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dropfilter/tensor.hpp"

namespace dropfilter {

// Deterministic random source: xoshiro256** seeded through splitmix64.
// The generator is fixed so that a (seed, call sequence) pair reproduces the
// same stream on every platform. Draw accounting:
//   - next_u64 / next_uniform: 1 raw draw
//   - Bernoulli element: 1 raw draw
//   - normal values: Box-Muller, 2 raw draws per produced pair (an odd tail
//     still consumes 2 draws and discards the second value)
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed);

    std::uint64_t next_u64();
    // uniform on [0,1), 53-bit resolution
    double next_uniform();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t draw_count() const { return draws_; }

    // Independent stream derived from this source's seed (not its state);
    // stream ids give reproducible sub-generators for concurrent consumers.
    RandomSource derive(std::uint64_t stream_id) const;

private:
    std::uint64_t state_[4];
    std::uint64_t seed_ = 0;
    std::uint64_t draws_ = 0;
};

RandomSource rng_from_seed(std::uint64_t seed);

// splitmix64 applied to (seed, stream_id); used by RandomSource::derive.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id);

// Each element 1.0 with probability keep_prob, else 0.0.
// keep_prob outside [0,1] -> ValueError.
Mask sample_bernoulli_mask(RandomSource& rng, std::vector<std::size_t> shape, double keep_prob);

// Each element i.i.d. uniform on [0,1).
Mask sample_uniform_mask(RandomSource& rng, std::vector<std::size_t> shape);

// Each element i.i.d. N(mean, variance); variance < 0 -> ValueError.
// variance == 0 produces exactly `mean` (draws are still consumed).
Mask sample_normal_mask(RandomSource& rng, std::vector<std::size_t> shape, double mean,
                        double variance);

void fill_bernoulli(RandomSource& rng, std::span<double> out, double keep_prob);
void fill_uniform(RandomSource& rng, std::span<double> out);
void fill_normal(RandomSource& rng, std::span<double> out, double mean, double variance);

} // namespace dropfilter
