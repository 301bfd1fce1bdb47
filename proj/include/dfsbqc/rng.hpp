#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace dfsbqc {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Engine for one Monte Carlo trial. The stream depends only on
/// (seed, index), so trials can run in any order, on any number of
/// workers, and still replay bit-identically.
inline Rng trial_rng(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed ^ splitmix64(index + 0x51e03bull)));
}

/// Samples an index from unnormalized non-negative weights.
std::size_t sample_discrete(std::span<const double> weights, Rng& rng);

/// Kahan compensated accumulator.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

}  // namespace dfsbqc
