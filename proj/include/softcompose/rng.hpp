#pragma once

#include <cstdint>
#include <span>

namespace softcompose {

// Algorithm identifier recorded in every report that consumed randomness.
inline constexpr const char* kRngAlgorithm = "splitmix64";

/// Seedable counter-based generator (splitmix64). Output is fully
/// determined by the seed and independent of platform or library version,
/// which std::uniform_real_distribution does not guarantee.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). n must be positive.
    int next_int(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(next()) *
                                 static_cast<unsigned __int128>(n)) >> 64);
    }

    /// Uniform double in [lo, hi).
    double next_double(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Sample an index from cumulative weights implied by `probs`
    /// (nonnegative, summing to ~1). Returns the last index with
    /// positive probability if rounding leaves residual mass.
    int next_discrete(std::span<const double> probs) {
        double u = next_double();
        double acc = 0.0;
        int last_positive = 0;
        for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
            if (probs[i] > 0.0) last_positive = i;
            acc += probs[i];
            if (u < acc) return i;
        }
        return last_positive;
    }

    /// Derive a stream seed, e.g. per-episode seeds hash(base, i).
    static std::uint64_t derive(std::uint64_t base, std::uint64_t stream) {
        SplitMix64 g(base ^ (0x632be59bd9b4e019ULL * (stream + 1)));
        return g.next();
    }

private:
    std::uint64_t state_;
};

}  // namespace softcompose
