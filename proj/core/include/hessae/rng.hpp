#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hessae {

/// Derives a child seed from a master seed, a stream tag and an index.
/// Fixed splitmix64-style mixing so every consumer gets an independent,
/// reproducible stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

/// Seedable random generator. All sampling goes through hand-rolled
/// primitives (not std distributions) so sequences are identical across
/// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform index in [0, n). Rejection sampling, no modulo bias.
    std::size_t index(std::size_t n);

    /// Standard normal via Box-Muller.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[index(i)]);
        }
    }

    /// Random permutation of 0..n-1.
    std::vector<int> permutation(int n);

    /// k distinct values from 0..n-1, in random order.
    std::vector<int> sample_without_replacement(int n, int k);

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hessae
