#pragma once

#include <cstdint>
#include <random>

namespace surfkern {

using Rng = std::mt19937_64;

// Purpose tags keep independent random streams apart even when they share a
// master seed and a sample index.
enum class StreamTag : std::uint64_t {
    model = 0x6d6f64656cULL,
    mask = 0x6d61736bULL,
    noise = 0x6e6f6973ULL,
    init = 0x696e6974ULL,
    shuffle = 0x73687566ULL,
    split = 0x73706c74ULL,
};

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// stream_seed = splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
constexpr std::uint64_t mix_seed(std::uint64_t master, StreamTag tag,
                                 std::uint64_t index) noexcept {
    return splitmix64(splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(tag)) ^ index);
}

inline Rng make_stream(std::uint64_t master, StreamTag tag, std::uint64_t index) {
    return Rng(mix_seed(master, tag, index));
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng, double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
    return std::bernoulli_distribution(p)(rng);
}

}  // namespace surfkern
