#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stereokin/channels.hpp"
#include "stereokin/constants.hpp"
#include "stereokin/ode.hpp"
#include "stereokin/parallel.hpp"

namespace stereokin {

/// Single-channel effective radial potential
///   V(R) = hbar^2 L(L+1) / (2 mu R^2) + c3 / R^3 - c6 / R^6
/// with the dipolar coefficient fixed by the channel geometry:
/// head-to-tail c3 = -2 d^2/(4 pi eps0), side-by-side c3 = +d^2/(4 pi eps0),
/// and the isotropic channel has neither barrier term.
struct AdiabaticPotential {
    Channel channel = Channel::isotropic;
    double induced_dipole = 0.0;  // C m
    double reduced_mass = 0.0;    // kg
    double c6 = 0.0;              // J m^6
    int l_eff = 0;
    double c3 = 0.0;              // J m^3, signed

    void validate() const {
        if (reduced_mass <= 0.0)
            throw std::invalid_argument("AdiabaticPotential: reduced_mass must be > 0");
        if (c6 < 0.0) throw std::invalid_argument("AdiabaticPotential: c6 must be >= 0");
        switch (channel) {
            case Channel::isotropic:
                if (c3 != 0.0 || l_eff != 0)
                    throw std::invalid_argument("AdiabaticPotential: isotropic channel has no barrier terms");
                break;
            case Channel::head_to_tail:
                if (c3 > 0.0) throw std::invalid_argument("AdiabaticPotential: head-to-tail c3 must be <= 0");
                break;
            case Channel::side_by_side:
                if (c3 < 0.0) throw std::invalid_argument("AdiabaticPotential: side-by-side c3 must be >= 0");
                break;
        }
    }
};

inline AdiabaticPotential make_adiabatic_potential(Channel channel, double induced_dipole,
                                                   double reduced_mass, double c6) {
    if (reduced_mass <= 0.0)
        throw std::invalid_argument("make_adiabatic_potential: reduced_mass must be > 0");
    if (induced_dipole < 0.0)
        throw std::invalid_argument("make_adiabatic_potential: induced_dipole must be >= 0");
    if (c6 < 0.0) throw std::invalid_argument("make_adiabatic_potential: c6 must be >= 0");

    AdiabaticPotential pot;
    pot.channel = channel;
    pot.induced_dipole = induced_dipole;
    pot.reduced_mass = reduced_mass;
    pot.c6 = c6;
    const double d2 = induced_dipole * induced_dipole / constants.vacuum_permittivity_factor;
    switch (channel) {
        case Channel::isotropic:
            pot.l_eff = 0;
            pot.c3 = 0.0;
            break;
        case Channel::head_to_tail:
            pot.l_eff = 1;
            pot.c3 = -2.0 * d2;
            break;
        case Channel::side_by_side:
            pot.l_eff = 1;
            pot.c3 = d2;
            break;
    }
    return pot;
}

inline double potential_value(const AdiabaticPotential& pot, double r) {
    if (r <= 0.0) throw std::invalid_argument("potential_value: R must be > 0");
    const double l = static_cast<double>(pot.l_eff);
    const double centrifugal =
        constants.hbar * constants.hbar * l * (l + 1.0) / (2.0 * pot.reduced_mass * r * r);
    return centrifugal + pot.c3 / (r * r * r) - pot.c6 / std::pow(r, 6);
}

struct BarrierSummary {
    double r_b = 0.0;  // m; 0 when barrierless
    double v_b = 0.0;  // J
    bool barrierless = true;
};

inline constexpr double kDefaultAbsorbingRadius = 1e-9;  // m

/// Locate the barrier maximum of V on (r_lo, r_hi) by a log-spaced grid scan
/// refined with golden-section search. The isotropic channel (and any
/// potential whose maximum is non-positive) reports barrierless.
inline BarrierSummary barrier(const AdiabaticPotential& pot,
                              double r_lo = kDefaultAbsorbingRadius, double r_hi = 1e-6) {
    pot.validate();
    if (pot.channel == Channel::isotropic) return {};

    const int ngrid = 2048;
    double best_r = r_lo, best_v = -std::numeric_limits<double>::infinity();
    const double lf = std::log(r_lo * 1.05), lr = std::log(r_hi);
    for (int i = 0; i <= ngrid; ++i) {
        const double r = std::exp(lf + (lr - lf) * i / ngrid);
        const double v = potential_value(pot, r);
        if (v > best_v) {
            best_v = v;
            best_r = r;
        }
    }
    if (best_v <= 0.0) return {};

    // golden-section refinement around the grid maximum
    const double step = (lr - lf) / ngrid;
    double a = best_r * std::exp(-step), b = best_r * std::exp(step);
    constexpr double gr = 0.6180339887498949;
    for (int it = 0; it < 200 && (b - a) > 1e-15 * b; ++it) {
        const double c = b - gr * (b - a);
        const double d = a + gr * (b - a);
        if (potential_value(pot, c) > potential_value(pot, d)) b = d;
        else a = c;
    }
    const double rb = 0.5 * (a + b);
    return {rb, potential_value(pot, rb), false};
}

enum class TransmissionMethod { numerical, wkb };

struct TransmissionResult {
    double energy = 0.0;         // J
    double probability = 0.0;    // in [0, 1]
    BarrierSummary barrier;
    TransmissionMethod method = TransmissionMethod::numerical;
    bool over_barrier = false;
    double flux_error = 0.0;     // |T + R - 1| of the numerical solve
};

namespace detail {

// Matching radius where the dipolar and van der Waals terms are below
// residual_fraction of the collision energy.
inline double matching_radius(const AdiabaticPotential& pot, double energy,
                              double residual_fraction = 1e-4) {
    double r = 2.0e-8;
    if (pot.c3 != 0.0)
        r = std::max(r, std::cbrt(std::abs(pot.c3) / (residual_fraction * energy)));
    if (pot.c6 > 0.0)
        r = std::max(r, std::pow(pot.c6 / (residual_fraction * energy), 1.0 / 6.0));
    return r;
}

}  // namespace detail

/// Quantum transmission through the channel potential with a perfectly
/// absorbing short-range boundary: a purely incoming (WKB-corrected) wave at
/// r_abs, integrated outward and flux-decomposed against exact free solutions
/// (Riccati-Hankel for L=1, plane waves for L=0) at the matching radius.
/// The returned flux_error measures |T + reflectivity - 1|, which vanishes
/// exactly for the true solution (constant Wronskian).
inline TransmissionResult transmission(const AdiabaticPotential& pot, double energy,
                                       double r_abs = kDefaultAbsorbingRadius) {
    pot.validate();
    if (energy <= 0.0) throw std::invalid_argument("transmission: energy must be > 0");
    if (r_abs <= 0.0) throw std::invalid_argument("transmission: r_abs must be > 0");

    TransmissionResult out;
    out.energy = energy;
    out.method = TransmissionMethod::numerical;
    out.barrier = barrier(pot, r_abs);
    out.over_barrier = out.barrier.barrierless || energy >= out.barrier.v_b;
    if (!out.barrier.barrierless && r_abs >= out.barrier.r_b)
        throw std::invalid_argument("transmission: r_abs must lie below the barrier region");

    const double two_mu_over_h2 =
        2.0 * pot.reduced_mass / (constants.hbar * constants.hbar);
    auto q2 = [&](double r) { return two_mu_over_h2 * (energy - potential_value(pot, r)); };

    const double q2_abs = q2(r_abs);
    if (q2_abs <= 0.0)
        throw std::invalid_argument("transmission: r_abs is classically forbidden; move it inward");
    const double q_abs = std::sqrt(q2_abs);

    const double k = std::sqrt(two_mu_over_h2 * energy);
    const double r_max = std::max(detail::matching_radius(pot, energy), 2.0 * r_abs);

    // incoming-wave start: u = 1, u' = -i q - q'/(2q)  (local WKB phase/amplitude)
    const double dr = r_abs * 1e-6;
    const double dq_dr = (std::sqrt(q2(r_abs + dr)) - std::sqrt(q2(r_abs - dr))) / (2.0 * dr);
    std::vector<double> y = {1.0, 0.0, -dq_dr / (2.0 * q_abs), -q_abs};

    auto rhs = [&](double r, const std::vector<double>& s, std::vector<double>& ds) {
        const double qq = q2(r);
        ds[0] = s[2];
        ds[1] = s[3];
        ds[2] = -qq * s[0];
        ds[3] = -qq * s[1];
    };
    OdeOptions opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-12;
    try {
        rk45_integrate(rhs, y, r_abs, r_max, opt);
    } catch (const integration_error& e) {
        throw integration_error(std::string("transmission: radial solve failed: ") + e.what());
    }

    const std::complex<double> u(y[0], y[1]), du(y[2], y[3]);
    const std::complex<double> i1(0.0, 1.0);
    const double x = k * r_max;
    std::complex<double> hp, dhp;  // outgoing free solution and derivative
    if (pot.l_eff == 0) {
        hp = std::exp(i1 * x);
        dhp = i1 * k * hp;
    } else {
        hp = std::exp(i1 * x) * (1.0 + i1 / x);
        dhp = k * std::exp(i1 * x) * (i1 - 1.0 / x - i1 / (x * x));
    }
    const std::complex<double> hm = std::conj(hp), dhm = std::conj(dhp);
    const std::complex<double> wronskian = hm * dhp - hp * dhm;  // = 2ik
    const std::complex<double> a_in = (u * dhp - du * hp) / wronskian;
    const std::complex<double> b_out = (du * hm - u * dhm) / wronskian;

    const double incident = k * std::norm(a_in);
    out.probability = q_abs / incident;
    const double reflected = std::norm(b_out) / std::norm(a_in);
    out.flux_error = std::abs(out.probability + reflected - 1.0);
    out.probability = std::clamp(out.probability, 0.0, 1.0);
    return out;
}

/// WKB barrier-penetration estimate exp(-2 integral sqrt(2 mu (V-E))/hbar dR)
/// between the classical turning points; an order-of-magnitude cross-check of
/// the numerical solve. The tunneling integrand carries the Langer
/// substitution L(L+1) -> (L+1/2)^2, i.e. an extra hbar^2/(8 mu R^2), which
/// is what makes radial WKB quantitatively usable. Over-barrier energies
/// report probability 1.
inline TransmissionResult transmission_wkb(const AdiabaticPotential& pot, double energy,
                                           double r_abs = kDefaultAbsorbingRadius) {
    pot.validate();
    if (energy <= 0.0) throw std::invalid_argument("transmission_wkb: energy must be > 0");

    auto v_langer = [&](double r) {
        return potential_value(pot, r) +
               constants.hbar * constants.hbar / (8.0 * pot.reduced_mass * r * r);
    };

    TransmissionResult out;
    out.energy = energy;
    out.method = TransmissionMethod::wkb;
    out.barrier = barrier(pot, r_abs);
    out.over_barrier = out.barrier.barrierless || energy >= out.barrier.v_b;
    if (out.over_barrier) {
        out.probability = 1.0;
        return out;
    }

    // classical turning points of the Langer-corrected potential by bisection
    auto above = [&](double r) { return v_langer(r) - energy; };
    auto bisect = [&](double lo, double hi) {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (above(lo) * above(mid) <= 0.0) hi = mid;
            else lo = mid;
        }
        return 0.5 * (lo + hi);
    };
    double r_in_lo = r_abs, r_in_hi = out.barrier.r_b;
    if (above(r_in_lo) >= 0.0)
        throw std::invalid_argument("transmission_wkb: r_abs above the collision energy");
    double r_far = out.barrier.r_b;
    while (above(r_far) > 0.0) r_far *= 1.5;
    const double r1 = bisect(r_in_lo, r_in_hi);
    const double r2 = bisect(out.barrier.r_b, r_far);  // descending side

    // integrate kappa over [r1, r2]; smoothstep substitution absorbs the
    // sqrt endpoint singularities
    const double two_mu = 2.0 * pot.reduced_mass;
    auto kappa = [&](double r) {
        const double dv = v_langer(r) - energy;
        return dv > 0.0 ? std::sqrt(two_mu * dv) / constants.hbar : 0.0;
    };
    const int nodes = 96;
    double theta = 0.0;
    for (int i = 0; i < nodes; ++i) {  // midpoint rule in the mapped variable
        const double s = (i + 0.5) / nodes;
        const double map = s * s * (3.0 - 2.0 * s);
        const double dmap = 6.0 * s * (1.0 - s);
        const double r = r1 + (r2 - r1) * map;
        theta += kappa(r) * dmap * (r2 - r1) / nodes;
    }
    out.probability = std::exp(-2.0 * theta);
    return out;
}

struct RateOptions {
    double r_abs = kDefaultAbsorbingRadius;
    bool thermal_average = false;  // Maxwell-Boltzmann average instead of E = k_B T
    int energy_nodes = 32;
};

/// Capture rate constant for one channel at collision energy E = k_B T_gas:
///   beta = g (2 L_eff + 1) (pi / k^2) T(E) v,
/// with identical-particle factor g = 2 for the barriered channels and g = 1
/// for distinguishable molecules. Optionally Maxwell-Boltzmann averaged.
inline double rate_constant(const AdiabaticPotential& pot, double t_gas,
                            const RateOptions& options = {}) {
    pot.validate();
    if (t_gas <= 0.0) throw std::invalid_argument("rate_constant: t_gas must be > 0");

    const double g = pot.channel == Channel::isotropic ? 1.0 : 2.0;
    const double weight = g * (2.0 * pot.l_eff + 1.0);
    auto beta_at = [&](double energy) {
        const double k = std::sqrt(2.0 * pot.reduced_mass * energy) / constants.hbar;
        const double v = constants.hbar * k / pot.reduced_mass;
        const double t = transmission(pot, energy, options.r_abs).probability;
        return weight * std::numbers::pi / (k * k) * t * v;
    };

    const double kbt = constants.boltzmann * t_gas;
    if (!options.thermal_average) return beta_at(kbt);

    // <beta> = integral beta(E) f(E) dE, f(E) = 2/sqrt(pi) sqrt(x) e^-x / kbt,
    // x = E/kbt; midpoint rule on x in (0, 10]
    const int n = std::max(options.energy_nodes, 8);
    const double x_hi = 10.0;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = x_hi * (i + 0.5) / n;
        const double f = 2.0 * std::numbers::inv_sqrtpi * std::sqrt(x) * std::exp(-x);
        acc += beta_at(x * kbt) * f * (x_hi / n);
    }
    return acc;
}

struct RateVsDipole {
    struct Point {
        double dipole = 0.0;        // C m
        double beta3d = 0.0;        // m^3/s
        double barrier_height = 0.0;  // J
        double barrier_radius = 0.0;  // m
        double transmission = 0.0;
    };
    Channel channel = Channel::isotropic;
    double t_gas = 0.0;
    std::vector<Point> points;
    double slope = 0.0;            // d(log beta)/d(log d) over the window
    double window_lo = 0.0, window_hi = 0.0;  // C m
    int window_points = 0;
};

/// Rate constant across a dipole grid plus the log-log slope over a window.
/// Grid points evaluate independently (parallelized).
inline RateVsDipole dipole_scan(Channel channel, std::span<const double> d_grid, double t_gas,
                                double reduced_mass, double c6, double window_lo,
                                double window_hi, const RateOptions& options = {}) {
    if (d_grid.size() < 2) throw std::invalid_argument("dipole_scan: need at least 2 grid points");
    for (std::size_t i = 1; i < d_grid.size(); ++i)
        if (d_grid[i] <= d_grid[i - 1])
            throw std::invalid_argument("dipole_scan: d grid must be strictly increasing");
    if (window_lo >= window_hi) throw std::invalid_argument("dipole_scan: bad slope window");

    RateVsDipole scan;
    scan.channel = channel;
    scan.t_gas = t_gas;
    scan.window_lo = window_lo;
    scan.window_hi = window_hi;
    scan.points.resize(d_grid.size());

    parallel_for(d_grid.size(), [&](std::size_t i) {
        const AdiabaticPotential pot =
            make_adiabatic_potential(channel, d_grid[i], reduced_mass, c6);
        RateVsDipole::Point pt;
        pt.dipole = d_grid[i];
        pt.beta3d = rate_constant(pot, t_gas, options);
        const BarrierSummary b = barrier(pot, options.r_abs);
        pt.barrier_height = b.v_b;
        pt.barrier_radius = b.r_b;
        pt.transmission =
            transmission(pot, constants.boltzmann * t_gas, options.r_abs).probability;
        scan.points[i] = pt;
    });

    // least-squares slope of log beta vs log d inside the window
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (const auto& pt : scan.points) {
        if (pt.dipole < window_lo || pt.dipole > window_hi) continue;
        if (pt.dipole <= 0.0 || pt.beta3d <= 0.0) continue;
        const double lx = std::log(pt.dipole), ly = std::log(pt.beta3d);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 3) throw std::invalid_argument("dipole_scan: fewer than 3 usable points in the slope window");
    scan.window_points = m;
    scan.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return scan;
}

}  // namespace stereokin
