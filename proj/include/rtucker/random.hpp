#pragma once

// Counter-based random streams.
//
// A stream is a 64-bit key plus a 64-bit counter; draw k of stream `key` is
// splitmix64(key ^ splitmix64(k)), so any draw can be recomputed without replaying
// the ones before it. Substreams are derived with split(tag), which hashes the tag
// into a fresh key. Algorithms split one substream per mode (and per kernel call)
// so results do not depend on the order in which modes are evaluated.
//
// Gaussians use the Box-Muller transform on two consecutive 53-bit uniforms,
// returning the cosine branch only (one normal per two uniforms).

#include "rtucker/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rtucker {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

enum class Distribution { gaussian, uniform_pm1 };

class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed = 0) : key_(splitmix64(seed ^ 0x5DEECE66DULL)) {}

    [[nodiscard]] RandomStream split(std::uint64_t tag) const {
        RandomStream s;
        s.key_ = splitmix64(key_ ^ splitmix64(tag + 0xA24BAED4963EE407ULL));
        return s;
    }
    [[nodiscard]] RandomStream split(std::uint64_t a, std::uint64_t b) const { return split(a).split(b); }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire-style rejection keeps the draw unbiased
        const std::uint64_t limit = max() - max() % n;
        for (;;) {
            const std::uint64_t x = (*this)();
            if (x < limit) return x % n;
        }
    }

    double gaussian() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double draw(Distribution d) { return d == Distribution::gaussian ? gaussian() : 2.0 * uniform() - 1.0; }

    Matrix matrix(Index rows, Index cols, Distribution d = Distribution::gaussian) {
        Matrix m(rows, cols);
        // column-major fill keeps the draw order tied to the storage order
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) m(i, j) = draw(d);
        return m;
    }

    Vector vector(Index n, Distribution d = Distribution::gaussian) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v(i) = draw(d);
        return v;
    }

    DenseTensor tensor(const Shape& s, Distribution d = Distribution::gaussian) {
        DenseTensor t(s);
        for (double& x : t.data()) x = draw(d);
        return t;
    }

    [[nodiscard]] std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace rtucker
