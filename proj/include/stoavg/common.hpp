#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace stoavg {

// Compensated (Kahan-Neumaier) accumulator. Summation order still matters
// for bit-identical results, so parallel reductions must merge in a fixed
// order (by path index).
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double kahan_total(const std::vector<double>& xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

struct PopulationOverflow : std::runtime_error {
    explicit PopulationOverflow(const std::string& what) : std::runtime_error(what) {}
};
struct UnbalancedKernel : std::runtime_error {
    explicit UnbalancedKernel(const std::string& what) : std::runtime_error(what) {}
};
struct NonpositiveWeight : std::runtime_error {
    explicit NonpositiveWeight(const std::string& what) : std::runtime_error(what) {}
};
struct StepTooLarge : std::runtime_error {
    explicit StepTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// Number of ensemble workers: STOAVG_WORKERS if set, else hardware threads.
inline unsigned default_workers() {
    if (const char* env = std::getenv("STOAVG_WORKERS")) {
        int w = std::atoi(env);
        if (w > 0) return static_cast<unsigned>(w);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? hc : 1;
}

// Runs fn(i) for i in [0, count). Each index writes only its own output
// slot, so the partition into worker blocks cannot affect results.
inline void parallel_for(std::size_t count, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t block = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * block;
        std::size_t hi = std::min(count, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace stoavg
