#pragma once

// Central finite-difference oracle for the reverse-mode engine. Everything
// runs in 64-bit: the caller supplies a deterministic scalar-valued builder
// over double-precision parameters, and each chosen coordinate is compared
// against (f(x+h) - f(x-h)) / 2h. Large tensors may be coordinate-subsampled
// with a fixed, reported seed so reruns check the same coordinates.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fatformer/rng.hpp"
#include "fatformer/tensor.hpp"

namespace ftf {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    long worst_index = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    int coords_checked = 0;
    int coords_total = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double h = 1e-5;
    double tol = 1e-6;
    uint64_t subsample_seed = 0;
    int max_coords_per_tensor = 0;  // 0 = exhaustive

    double max_rel_err() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, e.max_rel_err);
        return m;
    }
    bool pass() const { return max_rel_err() < tol; }
};

// Denominator floor keeps near-zero gradients from blowing up the ratio
// while still flagging a wrong nonzero analytic gradient.
inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-5});
    return std::abs(a - b) / denom;
}

template <typename F>
GradCheckReport grad_check(F&& f, const std::vector<std::pair<std::string, Tensor64>>& params,
                           double h = 1e-5, double tol = 1e-6, int max_coords_per_tensor = 0,
                           uint64_t subsample_seed = 0x5eed) {
    GradCheckReport report;
    report.h = h;
    report.tol = tol;
    report.subsample_seed = subsample_seed;
    report.max_coords_per_tensor = max_coords_per_tensor;

    for (auto& [name, p] : params) const_cast<Tensor64&>(p).zero_grad();
    {
        Tensor64 loss = f();
        backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& [name, p] : params) analytic.push_back(*p.grad);

    NoGrad off;
    size_t pi = 0;
    for (auto& [name, p] : params) {
        GradCheckEntry entry;
        entry.name = name;
        entry.coords_total = p.numel();

        std::vector<int> coords;
        if (max_coords_per_tensor > 0 && p.numel() > max_coords_per_tensor) {
            Rng rng(Rng::derive(subsample_seed, {static_cast<uint64_t>(pi)}));
            std::vector<int> all(static_cast<size_t>(p.numel()));
            for (int i = 0; i < p.numel(); ++i) all[static_cast<size_t>(i)] = i;
            for (int i = 0; i < max_coords_per_tensor; ++i) {
                const int j = rng.uniform_int(i, p.numel() - 1);
                std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
            }
            coords.assign(all.begin(), all.begin() + max_coords_per_tensor);
        } else {
            coords.resize(static_cast<size_t>(p.numel()));
            for (int i = 0; i < p.numel(); ++i) coords[static_cast<size_t>(i)] = i;
        }
        entry.coords_checked = static_cast<int>(coords.size());

        std::vector<double>& buf = *p.data;
        for (int idx : coords) {
            const double saved = buf[static_cast<size_t>(idx)];
            buf[static_cast<size_t>(idx)] = saved + h;
            const double fp = f().item();
            buf[static_cast<size_t>(idx)] = saved - h;
            const double fm = f().item();
            buf[static_cast<size_t>(idx)] = saved;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[pi][static_cast<size_t>(idx)];
            const double e = rel_err(a, numeric);
            if (e > entry.max_rel_err) {
                entry.max_rel_err = e;
                entry.worst_index = idx;
                entry.worst_analytic = a;
                entry.worst_numeric = numeric;
            }
        }
        report.entries.push_back(std::move(entry));
        ++pi;
    }
    return report;
}

}  // namespace ftf
