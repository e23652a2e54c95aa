#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace ftf {

// Deterministic splitmix64-based generator. The standard <random>
// distributions are implementation-defined, so everything that must be
// reproducible bit-for-bit (dataset synthesis, init, shuffles,
// augmentation draws) goes through this.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed + 0x9E3779B97F4A7C15ULL) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive range
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
    }

    bool coin() { return (next_u64() & 1u) != 0; }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Box-Muller on (0,1] uniforms
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586477 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Derives an independent stream seed from a base seed and tags,
    // e.g. derive(seed, {epoch, sample_index}).
    static uint64_t derive(uint64_t base, std::initializer_list<uint64_t> tags) {
        uint64_t h = base + 0x9E3779B97F4A7C15ULL;
        for (uint64_t t : tags) {
            h ^= t + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
            h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
            h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
            h ^= h >> 31;
        }
        return h;
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ftf
