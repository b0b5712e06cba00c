#ifndef MBSFN_RNG_HPP_
#define MBSFN_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <string_view>

namespace mbsfn {

// Deterministic counter-free PRNG (splitmix64). All randomness in the
// simulator flows through named substreams derived from one master seed,
// so that changing one generator's consumption never perturbs another.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [lo, hi] inclusive, rejection-free modulo bias fix.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return lo + static_cast<int64_t>(v % span);
    }

    // Standard normal via Box-Muller (one value per call; the sine twin is
    // discarded to keep the stream position independent of call pairing).
    double normal() {
        double u1;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    uint64_t state_;
};

// FNV-1a over a stream label.
constexpr uint64_t hash_label(std::string_view label) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t mix64(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Substream seed for (master, label, indices...). Documented derivation:
// fold each component into the state with splitmix64's mixer.
template <typename... Idx>
uint64_t substream(uint64_t master, std::string_view label, Idx... idx) {
    uint64_t h = mix64(master, hash_label(label));
    ((h = mix64(h, static_cast<uint64_t>(idx))), ...);
    return h;
}

} // namespace mbsfn

#endif
