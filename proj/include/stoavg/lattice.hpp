#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stoavg/common.hpp"

namespace stoavg {

// Finite deme set with migration rates a(j, i) = rate of one individual
// jumping from deme i to deme j.  Validated matrices are doubly balanced
// (all row and column sums equal one shared mu) and carry the minimal c
// with sum_i gamma_i a(i, j) <= c gamma_j.
struct MigrationKernel {
    std::size_t k = 0;
    std::vector<double> rates;  // row-major, rates[j * k + i] = a(j, i)
    std::vector<double> gamma;
    double mu = 0.0;
    double c = 0.0;

    double rate(std::size_t j, std::size_t i) const { return rates[j * k + i]; }
    std::size_t size() const { return k; }
};

inline MigrationKernel validate_kernel(const std::vector<std::vector<double>>& a,
                                       const std::vector<double>& gamma) {
    const std::size_t k = a.size();
    if (k == 0) throw std::invalid_argument("validate_kernel: empty matrix");
    if (gamma.size() != k)
        throw NonpositiveWeight("validate_kernel: gamma size mismatch");
    for (double g : gamma)
        if (!(g > 0.0)) throw NonpositiveWeight("validate_kernel: gamma entries must be positive");

    MigrationKernel kernel;
    kernel.k = k;
    kernel.gamma = gamma;
    kernel.rates.assign(k * k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        if (a[j].size() != k) throw std::invalid_argument("validate_kernel: matrix not square");
        for (std::size_t i = 0; i < k; ++i) {
            if (a[j][i] < 0.0)
                throw std::invalid_argument("validate_kernel: negative rate");
            if (i == j && a[j][i] != 0.0)
                throw std::invalid_argument("validate_kernel: nonzero diagonal");
            kernel.rates[j * k + i] = a[j][i];
        }
    }

    // doubly balanced: every row sum and column sum equals one shared mu
    double mu = 0.0;
    for (std::size_t i = 0; i < k; ++i) mu += kernel.rate(0, i);
    for (std::size_t j = 0; j < k; ++j) {
        double row = 0.0, col = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            row += kernel.rate(j, i);
            col += kernel.rate(i, j);
        }
        if (std::abs(row - mu) > 1e-10 || std::abs(col - mu) > 1e-10)
            throw UnbalancedKernel("validate_kernel: row/column sums differ (deme " +
                                   std::to_string(j) + ": row " + std::to_string(row) +
                                   ", col " + std::to_string(col) + ", mu " +
                                   std::to_string(mu) + ")");
    }
    kernel.mu = mu;

    double c = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += gamma[i] * kernel.rate(i, j);
        c = std::max(c, s / gamma[j]);
    }
    kernel.c = c;
    return kernel;
}

inline double ell_gamma_norm(std::span<const double> x, const MigrationKernel& kernel) {
    KahanSum s;
    for (std::size_t i = 0; i < kernel.size(); ++i) s.add(kernel.gamma[i] * std::abs(x[i]));
    return s.value();
}

// --- builders ------------------------------------------------------------
// The deme set of the theory is countable; these builders give the finite
// truncations the toolkit works on.  Cycle and torus wrap around, so the
// balance condition holds without boundary corrections.

inline MigrationKernel single_deme() {
    return validate_kernel({{0.0}}, {1.0});
}

inline MigrationKernel cycle_kernel(std::size_t k, double rate) {
    if (k < 2) return single_deme();
    std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        a[(i + 1) % k][i] = rate;
        a[(i + k - 1) % k][i] = rate;
    }
    return validate_kernel(a, std::vector<double>(k, 1.0));
}

inline MigrationKernel complete_kernel(std::size_t k, double rate) {
    if (k < 2) return single_deme();
    std::vector<std::vector<double>> a(k, std::vector<double>(k, rate));
    for (std::size_t i = 0; i < k; ++i) a[i][i] = 0.0;
    return validate_kernel(a, std::vector<double>(k, 1.0));
}

inline MigrationKernel torus_kernel(std::size_t kx, std::size_t ky, double rate) {
    std::size_t k = kx * ky;
    if (k < 2) return single_deme();
    auto idx = [&](std::size_t x, std::size_t y) { return y * kx + x; };
    std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.0));
    for (std::size_t y = 0; y < ky; ++y)
        for (std::size_t x = 0; x < kx; ++x) {
            std::size_t i = idx(x, y);
            if (kx > 1) {
                a[idx((x + 1) % kx, y)][i] += rate;
                a[idx((x + kx - 1) % kx, y)][i] += rate;
            }
            if (ky > 1) {
                a[idx(x, (y + 1) % ky)][i] += rate;
                a[idx(x, (y + ky - 1) % ky)][i] += rate;
            }
        }
    return validate_kernel(a, std::vector<double>(k, 1.0));
}

}  // namespace stoavg
