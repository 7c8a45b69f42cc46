#pragma once

#include <cstdint>

namespace prore::tts {

/// Counter-friendly splittable PRNG. Substreams derived from (seed, index)
/// are independent enough for Monte-Carlo use and make reductions
/// order-independent. Algorithm id recorded in run metadata: "splitmix64".
class SplitMix64 {
public:
    static constexpr const char* kAlgorithmId = "splitmix64";

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 mixer(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
        return SplitMix64(mixer.next());
    }

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    std::uint64_t next_below(std::uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

private:
    std::uint64_t state_;
};

} // namespace prore::tts
