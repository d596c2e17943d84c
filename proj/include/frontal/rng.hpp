#pragma once

#include <cmath>
#include <cstdint>

#include "frontal/errors.hpp"

namespace frontal {

// SplitMix64 (Steele/Lea/Burton, as distributed by Vigna). Chosen as the
// project PRNG because it is a dozen lines, has exact published outputs,
// and splits into independent streams, so every run is reproducible
// bit-for-bit from a single integer seed.
//
// Reference outputs (first values for seed 0), also asserted in the tests:
//   0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, 0x06c45d188009454f,
//   0xf88bb8a8724c81ec, 0x1b39896a51a8749b
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 random mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo,hi). The half-open bound survives rounding: a result
    // that lands on hi is pulled back to the previous representable value.
    double uniform(double lo, double hi) {
        if (!(lo < hi)) {
            throw ContractError("uniform: requires lo < hi");
        }
        double v = lo + next_double() * (hi - lo);
        return v < hi ? v : std::nextafter(hi, lo);
    }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) {
            throw ContractError("next_below: n must be positive");
        }
        return next_u64() % n;
    }

    // Derives an independent child stream keyed by `tag` without advancing
    // this stream; children with distinct tags are distinct.
    SplitMix64 split(std::uint64_t tag) const {
        std::uint64_t z = state_ ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return SplitMix64(z ^ (z >> 31));
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

} // namespace frontal
