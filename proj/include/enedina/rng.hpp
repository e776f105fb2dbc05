#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace enedina {

// 64-bit finalizer of the splitmix scheme (shift-xor-multiply).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// SplitMix64: one 64-bit output per step over a Weyl sequence. Every random
// decision in the toolkit flows through this generator; substreams are
// derived with substream_seed so each record/phase is reproducible in
// isolation.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    // Unbiased-enough index draw via 128-bit multiply; n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

private:
    std::uint64_t state_;
};

// FNV-1a over a byte string; used for config/template hashing and for
// deriving named substreams.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Substream seed from (master seed, tag, two indices). Deterministic and
// collision-resistant enough for stream separation.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view tag,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = fnv1a(tag);
    h = mix64(h ^ mix64(seed));
    h = mix64(h ^ mix64(a * 0x9E3779B97F4A7C15ULL + 1));
    h = mix64(h ^ mix64(b * 0xD1B54A32D192ED03ULL + 2));
    return h;
}

// In-place Fisher-Yates driven by a SplitMix64 stream.
template <typename T>
void seeded_shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace enedina
