#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "rsplines/manifold.hpp"

namespace rsplines {

struct NelderMeadOptions {
    double initial_step = 0.1;   // per-coordinate perturbation of the start simplex
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    long max_evaluations = 20000;
    double target = 1e-6;        // stop once the best value drops below this
    double restart_step = 0.0;   // 0 → initial_step / 10
    /// Called once per iteration with (evaluations so far, best value).
    std::function<void(long, double)> observer;
};

struct NelderMeadResult {
    Vec x;
    double value = std::numeric_limits<double>::infinity();
    long evaluations = 0;
    bool reached_target = false;
    int restarts = 0;
};

/// Downhill simplex minimization. Deterministic; the only stochastic-looking
/// choice (the start simplex) is axis-aligned. On stagnation (simplex
/// collapsed in values or coordinates) it restarts once from the best vertex
/// with a smaller simplex, then gives up.
inline NelderMeadResult nelder_mead_minimize(const std::function<double(const Vec&)>& f,
                                             const Vec& x0, const NelderMeadOptions& opts = {}) {
    const int n = static_cast<int>(x0.size());
    const double restart_step =
        opts.restart_step > 0.0 ? opts.restart_step : opts.initial_step * 0.1;

    std::vector<Vec> xs;
    std::vector<double> fs;
    NelderMeadResult res;

    auto eval = [&](const Vec& x) {
        ++res.evaluations;
        return f(x);
    };
    auto build_simplex = [&](const Vec& base, double step, bool base_known, double base_value) {
        xs.assign(1, base);
        fs.assign(1, base_known ? base_value : eval(base));
        for (int i = 0; i < n; ++i) {
            Vec p = base;
            p[i] += step;
            xs.push_back(p);
            fs.push_back(eval(p));
        }
    };
    auto sort_simplex = [&]() {
        std::vector<int> idx(xs.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<Vec> xs2(xs.size());
        std::vector<double> fs2(fs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            xs2[i] = xs[idx[i]];
            fs2[i] = fs[idx[i]];
        }
        xs.swap(xs2);
        fs.swap(fs2);
    };

    build_simplex(x0, opts.initial_step, false, 0.0);

    while (res.evaluations < opts.max_evaluations) {
        sort_simplex();
        if (opts.observer) opts.observer(res.evaluations, fs[0]);
        if (fs[0] <= opts.target) {
            res.reached_target = true;
            break;
        }

        const double f_spread = fs[n] - fs[0];
        double x_spread = 0.0;
        for (int i = 1; i <= n; ++i) x_spread = std::max(x_spread, (xs[i] - xs[0]).norm());
        if (f_spread <= 1e-18 + 1e-12 * std::abs(fs[0]) || x_spread < 1e-13) {
            if (res.restarts >= 1) break;
            ++res.restarts;
            build_simplex(xs[0], restart_step, true, fs[0]);
            continue;
        }

        Vec centroid = Vec::Zero(n);
        for (int i = 0; i < n; ++i) centroid += xs[i];
        centroid /= static_cast<double>(n);

        const Vec reflected = centroid + opts.reflection * (centroid - xs[n]);
        const double f_reflected = eval(reflected);
        if (f_reflected < fs[0]) {
            const Vec expanded = centroid + opts.expansion * (reflected - centroid);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) {
                xs[n] = expanded;
                fs[n] = f_expanded;
            } else {
                xs[n] = reflected;
                fs[n] = f_reflected;
            }
        } else if (f_reflected < fs[n - 1]) {
            xs[n] = reflected;
            fs[n] = f_reflected;
        } else {
            const Vec toward = f_reflected < fs[n] ? reflected : xs[n];
            const Vec contracted = centroid + opts.contraction * (toward - centroid);
            const double f_contracted = eval(contracted);
            if (f_contracted < std::min(f_reflected, fs[n])) {
                xs[n] = contracted;
                fs[n] = f_contracted;
            } else {
                for (int i = 1; i <= n; ++i) {
                    xs[i] = xs[0] + opts.shrink * (xs[i] - xs[0]);
                    fs[i] = eval(xs[i]);
                }
            }
        }
    }

    sort_simplex();
    res.x = xs[0];
    res.value = fs[0];
    res.reached_target = fs[0] <= opts.target;
    return res;
}

}  // namespace rsplines
