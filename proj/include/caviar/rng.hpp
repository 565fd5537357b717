#pragma once

#include <cstdint>
#include <random>

#include "caviar/stats.hpp"

namespace caviar {

// Seeded generator with portable output: the mt19937_64 stream is pinned by
// the standard, uniforms are built from raw bits and normals by inversion,
// so a seed reproduces the same draws on any conforming implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via inverse-CDF transform.
    double normal() {
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        return stats::normal_quantile(u);
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace caviar
