#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

namespace stoavg {

// Counter-based stream: output i of stream (seed, path, channel) is a
// fixed bijective hash of the counter, so streams can be created in any
// order (and on any worker) and still produce identical draws.
class CounterRng {
public:
    CounterRng(std::uint64_t master_seed, std::uint64_t path, std::uint64_t channel)
        : key_(derive_key(master_seed, path, channel)) {}

    std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    // uniform on [0, 1), 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0, 1], safe as a log argument
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // Box-Muller; both values kept to spend exactly two uniforms per pair
        double u = uniform_pos();
        double v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        cached_ = r * std::sin(6.283185307179586476925286766559 * v);
        have_cached_ = true;
        return r * std::cos(6.283185307179586476925286766559 * v);
    }

    long poisson(double mean) {
        if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
        long total = 0;
        // product method in chunks; chunking keeps the running product away
        // from the underflow threshold for large means
        while (mean > 0.0) {
            double chunk = mean > 500.0 ? 500.0 : mean;
            mean -= chunk;
            double limit = std::exp(-chunk);
            double prod = uniform_pos();
            long k = 0;
            while (prod > limit) {
                prod *= uniform_pos();
                ++k;
            }
            total += k;
        }
        return total;
    }

    // index into a finite pmf; weights need not be exactly normalized,
    // the tail index absorbs rounding
    std::size_t categorical(std::span<const double> weights) {
        double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }
    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t path,
                                    std::uint64_t channel) {
        std::uint64_t k = mix(seed + 0x9E3779B97F4A7C15ULL);
        k = mix(k ^ (path + 0xD1B54A32D192ED03ULL));
        k = mix(k ^ (channel + 0x8CB92BA72F3D8DD7ULL));
        return k;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace stoavg
