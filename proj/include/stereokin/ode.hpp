#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stereokin {

struct integration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OdeOptions {
    double rel_tol = 1e-8;
    double abs_tol = 0.0;           // same units as the state
    std::size_t max_steps = 2'000'000;
    double initial_step = 0.0;      // 0 = auto
};

struct OdeStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

/// Dormand-Prince 5(4) embedded Runge-Kutta with standard proportional step
/// control and FSAL reuse. Advances y in place from t0 to t1; `rhs(t, y, dy)`
/// fills dy. Observers that need intermediate output should call this once
/// per output interval.
template <class Rhs>
OdeStats rk45_integrate(Rhs&& rhs, std::vector<double>& y, double t0, double t1,
                        const OdeOptions& opt = {}) {
    // Dormand-Prince tableau
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 4th-order embedded weights
    static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                            e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    OdeStats stats;
    if (t1 == t0) return stats;
    if (!(opt.rel_tol > 0.0) || opt.abs_tol < 0.0)
        throw std::invalid_argument("rk45_integrate: tolerances must be positive");
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const std::size_t n = y.size();

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);

    double t = t0;
    rhs(t, y, k1);
    ++stats.rhs_evals;

    // initial step from the crude |y|/|y'| scale
    double h = opt.initial_step;
    if (h == 0.0) {
        double ny = 0.0, nd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
            if (sc > 0.0) {
                ny = std::max(ny, std::abs(y[i]) / sc);
                nd = std::max(nd, std::abs(k1[i]) / sc);
            }
        }
        h = (nd > 0.0) ? 0.01 * std::max(ny, 1.0) / nd : std::abs(t1 - t0) / 100.0;
        h = std::min(h, std::abs(t1 - t0));
    }
    h *= dir;

    // stop once the remaining span is at roundoff scale of the endpoint
    const double t_done = 4.0 * std::numeric_limits<double>::epsilon() *
                          std::max(std::abs(t0), std::abs(t1));
    while (dir * (t1 - t) > t_done) {
        if (stats.steps + stats.rejected > opt.max_steps)
            throw integration_error("rk45_integrate: exceeded max step count at t = " + std::to_string(t));
        if (dir * (t + h) > dir * t1) h = t1 - t;
        const double habs = std::abs(h);
        if (!(habs > std::abs(t) * 4.0 * std::numeric_limits<double>::epsilon() + 1e-300))
            throw integration_error("rk45_integrate: step size underflow at t = " + std::to_string(t));

        // k1 = f(t, y) stays valid across rejected trials (FSAL on accept)
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(t + h, ynew, k7);
        stats.rhs_evals += 6;

        // scaled error norm of (5th - 4th) order solutions
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * ((b1 - e1) * k1[i] + (b3 - e3) * k3[i] + (b4 - e4) * k4[i] +
                                  (b5 - e5) * k5[i] + (b6 - e6) * k6[i] - e7 * k7[i]);
            const double sc =
                opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            if (sc > 0.0) err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / static_cast<double>(n));
        if (!std::isfinite(err)) {  // derivative blow-up; retry smaller
            ++stats.rejected;
            h *= 0.2;
            continue;
        }

        if (err <= 1.0) {  // accept
            t += h;
            y.swap(ynew);
            k1.swap(k7);
            ++stats.steps;
            const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h *= std::clamp(grow, 0.2, 5.0);
        } else {  // reject, retry with smaller step
            ++stats.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
    }
    return stats;
}

/// Integrate and sample the solution at the given strictly increasing times.
/// `on_sample(index, t, y)` is invoked for every requested time, including
/// t0 when times.front() == t0.
template <class Rhs, class Observer>
OdeStats rk45_sample(Rhs&& rhs, std::vector<double>& y, double t0,
                     std::span<const double> times, Observer&& on_sample,
                     const OdeOptions& opt = {}) {
    OdeStats total;
    double t = t0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t)
            throw std::invalid_argument("rk45_sample: times must be increasing from t0");
        if (times[i] > t) {
            OdeStats s = rk45_integrate(rhs, y, t, times[i], opt);
            total.steps += s.steps;
            total.rejected += s.rejected;
            total.rhs_evals += s.rhs_evals;
            t = times[i];
        }
        on_sample(i, t, y);
    }
    return total;
}

}  // namespace stereokin
