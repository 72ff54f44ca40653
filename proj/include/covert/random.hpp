#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace covert {

/// Seeded random stream. Draws are derived from raw mt19937_64 output so a
/// given seed replays identically across standard library implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Index drawn from an (unnormalized is fine) nonnegative weight vector.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        const double u = uniform() * total;
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            acc += weights[i];
            last_positive = i;
            if (u < acc) return i;
        }
        // rounding: u landed past the accumulated total
        return last_positive;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

/// Seed for sub-stream `index` of a master seed (batch b of iteration t uses
/// index t * batches + b).
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    return master + index;
}

}  // namespace covert
