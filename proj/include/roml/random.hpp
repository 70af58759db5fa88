#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace roml {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based seed derivation: the result depends only on the master seed
/// and the tag sequence, so adding runs or tasks never perturbs existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = mix64(master);
    for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

/// Seeded pseudo-random stream. Cheap to copy; a copy replays the same draws.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    /// Child stream keyed by the construction seed, independent of how many
    /// draws this stream has made.
    RandomStream split(std::initializer_list<std::uint64_t> tags) const {
        return RandomStream(derive_seed(seed_, tags));
    }

    std::uint64_t seed() const { return seed_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
    double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }
    std::size_t categorical(const double* probs, std::size_t n) {
        double u = uniform();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (u < probs[i]) return i;
            u -= probs[i];
        }
        return n - 1;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace roml
