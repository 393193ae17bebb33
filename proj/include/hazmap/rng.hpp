#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hazmap {
namespace rng {

// All randomized operations in the library draw through these helpers so
// that a given seed produces the same byte-identical output on every
// platform. std::mt19937_64 has a standard-mandated sequence; the
// distribution adaptors in <random> do not, so we roll our own here.

using Engine = std::mt19937_64;

/// Uniform index in [0, n). n must be > 0.
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
    return eng() % n;
}

/// Uniform double in [0, 1) with 53 bits of precision.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

/// Box-Muller standard normal sampler. Keeps the spare deviate so draws
/// come in deterministic pairs.
class Gaussian {
public:
    explicit Gaussian(Engine& eng) : eng_(eng) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01(eng_);
        } while (u1 <= 0.0);
        const double u2 = uniform01(eng_);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    Engine& eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Partial Fisher-Yates draw of `count` distinct indices out of [0, n),
/// returned in ascending order.
inline std::vector<std::uint32_t> sample_indices(Engine& eng, std::uint64_t n,
                                                 std::uint64_t count) {
    std::vector<std::uint32_t> idx(n);
    for (std::uint64_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t j = i + uniform_index(eng, n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace rng
}  // namespace hazmap
