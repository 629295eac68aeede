#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <random>

#include "clever/tensor.hpp"

namespace clever {

// splitmix64 finalizer; used both as a mixer for substream derivation and
// as a byte hash for deriving per-point seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic substream id from a base seed and a path of indices.
// Disjoint paths give statistically independent streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t p : path) {
        h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    }
    return h;
}

// Deterministic random stream. The engine is std::mt19937_64 (bit-exact per
// the standard); the distribution transforms are written out by hand so the
// produced sequence does not depend on the standard library implementation.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (no state carried between calls).
    double normal() {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, n); unbiased via rejection.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    // Isotropic unit vector of dimension d (normalized Gaussian; redraw on
    // the measure-zero all-zero draw).
    Tensor unit_vector(std::size_t d) {
        Tensor v({d});
        double norm = 0.0;
        do {
            for (std::size_t i = 0; i < d; ++i) v[i] = normal();
            norm = v.l2_norm();
        } while (norm == 0.0);
        for (std::size_t i = 0; i < d; ++i) v[i] /= norm;
        return v;
    }

private:
    std::mt19937_64 engine_;
};

// Hash of a tensor's exact bit pattern, for deriving per-point substreams
// inside pure sampling callbacks.
inline std::uint64_t tensor_bits_hash(const Tensor& t) {
    std::uint64_t h = 0x51ed270b35ae2d6bULL;
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::uint64_t bits;
        double v = t[i];
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        h = splitmix64(h ^ bits);
    }
    return h;
}

}  // namespace clever
