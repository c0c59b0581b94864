#pragma once

#include <cmath>
#include <cstdint>

namespace vrpd {

// Counter-mode SplitMix64.
//
// Draw i of stream s under seed k is mix64((k ^ mix64(s)) + (i+1) * GAMMA),
// where mix64 is the SplitMix64 finalizer and GAMMA is the golden-ratio
// increment. Streams are fully independent of each other: adding a new
// stream never perturbs draws of existing ones.
inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

class RngStream {
public:
    static constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    RngStream(uint64_t seed, uint64_t stream) : key_(seed ^ mix64(stream)) {}

    uint64_t next_u64() {
        ++ctr_;
        return mix64(key_ + ctr_ * kGamma);
    }

    // [0, 1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [lo, hi], Lemire's method with rejection.
    int next_int(int lo, int hi) {
        uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_bounded(range));
    }

    uint64_t next_bounded(uint64_t range) {
        while (true) {
            uint64_t x = next_u64();
            __uint128_t m = static_cast<__uint128_t>(x) * range;
            uint64_t low = static_cast<uint64_t>(m);
            if (low >= range) return static_cast<uint64_t>(m >> 64);
            uint64_t threshold = (0 - range) % range;
            if (low >= threshold) return static_cast<uint64_t>(m >> 64);
        }
    }

    // Box-Muller; consumes exactly two draws per call.
    double next_normal(double mu, double sigma) {
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    uint64_t counter() const { return ctr_; }

private:
    uint64_t key_;
    uint64_t ctr_ = 0;
};

}  // namespace vrpd
