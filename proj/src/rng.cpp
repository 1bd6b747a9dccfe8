#include "dropfilter/rng.hpp"

#include <cmath>
#include <numbers>

namespace dropfilter {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

inline std::uint64_t splitmix64_next(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64_next(x);
}

std::uint64_t RandomSource::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    ++draws_;
    return result;
}

double RandomSource::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

RandomSource RandomSource::derive(std::uint64_t stream_id) const {
    return RandomSource(derive_seed(seed_, stream_id));
}

RandomSource rng_from_seed(std::uint64_t seed) { return RandomSource(seed); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) {
    // advance splitmix64 from the seed by stream_id+1 steps; streams 0,1,...
    // land on distinct, well-mixed child seeds
    std::uint64_t x = seed;
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i <= stream_id; ++i) out = splitmix64_next(x);
    return out;
}

void fill_bernoulli(RandomSource& rng, std::span<double> out, double keep_prob) {
    if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) {
        throw ValueError("keep_prob must be in [0,1], got " + std::to_string(keep_prob));
    }
    for (double& v : out) v = rng.next_uniform() < keep_prob ? 1.0 : 0.0;
}

void fill_uniform(RandomSource& rng, std::span<double> out) {
    for (double& v : out) v = rng.next_uniform();
}

void fill_normal(RandomSource& rng, std::span<double> out, double mean, double variance) {
    if (variance < 0.0) {
        throw ValueError("variance must be non-negative, got " + std::to_string(variance));
    }
    const double sd = std::sqrt(variance);
    for (std::size_t i = 0; i < out.size(); i += 2) {
        // u1 in (0,1] keeps the log finite
        const double u1 = 1.0 - rng.next_uniform();
        const double u2 = rng.next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        out[i] = mean + sd * (r * std::cos(theta));
        if (i + 1 < out.size()) out[i + 1] = mean + sd * (r * std::sin(theta));
    }
}

Mask sample_bernoulli_mask(RandomSource& rng, std::vector<std::size_t> shape, double keep_prob) {
    Mask m(std::move(shape));
    fill_bernoulli(rng, std::span<double>(m.values()), keep_prob);
    return m;
}

Mask sample_uniform_mask(RandomSource& rng, std::vector<std::size_t> shape) {
    Mask m(std::move(shape));
    fill_uniform(rng, std::span<double>(m.values()));
    return m;
}

Mask sample_normal_mask(RandomSource& rng, std::vector<std::size_t> shape, double mean,
                        double variance) {
    Mask m(std::move(shape));
    fill_normal(rng, std::span<double>(m.values()), mean, variance);
    return m;
}

} // namespace dropfilter
