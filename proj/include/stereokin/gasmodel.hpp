#pragma once

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "stereokin/constants.hpp"

namespace stereokin {

/// Fractional populations f(v) over lattice vibrational levels v = 0..v_cut.
/// The top bucket aggregates the Boltzmann tail so the sum is exactly 1.
struct VibrationalDistribution {
    std::vector<double> fractions;

    int v_cut() const { return static_cast<int>(fractions.size()) - 1; }
    double operator[](int v) const { return fractions.at(static_cast<std::size_t>(v)); }

    double sum() const { return std::accumulate(fractions.begin(), fractions.end(), 0.0); }

    /// Sum of squared fractions; the intralevel pair weight.
    double purity() const {
        double s = 0.0;
        for (double f : fractions) s += f * f;
        return s;
    }

    void validate(double tol = 1e-12) const {
        if (fractions.empty()) throw std::invalid_argument("VibrationalDistribution: empty");
        for (double f : fractions)
            if (f < 0.0) throw std::invalid_argument("VibrationalDistribution: negative fraction");
        if (std::abs(sum() - 1.0) > tol)
            throw std::invalid_argument("VibrationalDistribution: fractions must sum to 1");
    }
};

/// Per-layer molecule numbers N_j over the occupied lattice layers,
/// j = -j_max..j_max.
struct LayerStack {
    std::vector<double> counts;  // index i maps to layer j = i - j_max
    int j_max = 0;

    double count(int j) const { return counts.at(static_cast<std::size_t>(j + j_max)); }
    double total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }
};

/// Cloud summary used to convert molecule number into an average 2D density.
struct CloudState {
    double total_number = 0.0;  // N
    double sigma_r = 0.0;       // transverse rms size, m
    double alpha = 1.0;         // effective layer number
};

/// Thermal occupancy of the axial lattice levels. Level spacing h*nu_z,
/// geometric weights (1-q) q^v with q = exp(-h nu_z / k_B T); the tail
/// v >= v_cut is aggregated into f(v_cut).
inline VibrationalDistribution boltzmann_occupancy(double temperature, double nu_z, int v_cut) {
    if (nu_z <= 0.0) throw std::invalid_argument("boltzmann_occupancy: nu_z must be > 0");
    if (temperature < 0.0) throw std::invalid_argument("boltzmann_occupancy: temperature must be >= 0");
    if (v_cut < 2) throw std::invalid_argument("boltzmann_occupancy: v_cut must be >= 2");

    VibrationalDistribution dist;
    dist.fractions.assign(static_cast<std::size_t>(v_cut) + 1, 0.0);
    if (temperature == 0.0) {
        dist.fractions[0] = 1.0;
        return dist;
    }
    const double q = std::exp(-constants.planck * nu_z / (constants.boltzmann * temperature));
    double geom = 1.0 - q;  // (1-q) q^v
    for (int v = 0; v < v_cut; ++v) {
        dist.fractions[static_cast<std::size_t>(v)] = geom;
        geom *= q;
    }
    dist.fractions[static_cast<std::size_t>(v_cut)] = std::pow(q, v_cut);  // tail sum
    return dist;
}

/// Parametric-heating transfer: a fraction p of the v=0 population is moved
/// to v=2 (lattice modulation at twice nu_z), everything else untouched.
inline VibrationalDistribution parametric_transfer(const VibrationalDistribution& dist, double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("parametric_transfer: p must be in [0, 1]");
    dist.validate();
    if (dist.fractions.size() < 3)
        throw std::invalid_argument("parametric_transfer: need levels up to v=2");
    VibrationalDistribution out = dist;
    const double moved = p * out.fractions[0];
    out.fractions[0] -= moved;
    out.fractions[2] += moved;
    return out;
}

/// Discrete Gaussian stack N_j ~ exp(-j^2 / 2w^2) for |j| <= j_max, scaled to
/// a total of N molecules.
inline LayerStack gaussian_layer_stack(double total, double width, int j_max) {
    if (total <= 0.0 || width < 0.0)
        throw std::invalid_argument("gaussian_layer_stack: need total > 0 and width >= 0");
    if (width > 0.0 && static_cast<double>(j_max) < 3.0 * width)
        throw std::invalid_argument("gaussian_layer_stack: j_max < 3w truncates the stack");

    LayerStack stack;
    stack.j_max = j_max;
    stack.counts.assign(2 * static_cast<std::size_t>(j_max) + 1, 0.0);
    if (width == 0.0) {  // single-layer limit
        stack.counts[static_cast<std::size_t>(j_max)] = total;
        return stack;
    }
    double norm = 0.0;
    for (int j = -j_max; j <= j_max; ++j) {
        const double nj = std::exp(-0.5 * static_cast<double>(j) * j / (width * width));
        stack.counts[static_cast<std::size_t>(j + j_max)] = nj;
        norm += nj;
    }
    for (double& c : stack.counts) c *= total / norm;
    return stack;
}

inline int default_j_max(double width) {
    return static_cast<int>(std::ceil(5.0 * width));
}

/// Effective layer number alpha = (sum N_j)^2 / sum N_j^2: the count of
/// uniformly filled layers equivalent to the stack.
inline double effective_layer_number(const LayerStack& stack) {
    double s1 = 0.0, s2 = 0.0;
    for (double n : stack.counts) {
        if (n < 0.0) throw std::invalid_argument("effective_layer_number: negative layer count");
        s1 += n;
        s2 += n * n;
    }
    if (s1 <= 0.0) throw std::invalid_argument("effective_layer_number: empty stack");
    return s1 * s1 / s2;
}

inline double effective_layer_number(const std::vector<double>& counts) {
    LayerStack s;
    s.counts = counts;
    return effective_layer_number(s);
}

/// Average 2D density N / (4 pi alpha sigma_r^2).
inline double average_2d_density(double total, double sigma_r, double alpha) {
    if (total <= 0.0 || sigma_r <= 0.0 || alpha <= 0.0)
        throw std::invalid_argument("average_2d_density: all inputs must be > 0");
    return total / (4.0 * std::numbers::pi * alpha * sigma_r * sigma_r);
}

inline double average_2d_density(const CloudState& cloud) {
    return average_2d_density(cloud.total_number, cloud.sigma_r, cloud.alpha);
}

/// Peak column density of one layer, N_peak / (2 pi sigma_r^2).
inline double peak_layer_density(double peak_count, double sigma_r) {
    if (sigma_r <= 0.0) throw std::invalid_argument("peak_layer_density: sigma_r must be > 0");
    if (peak_count < 0.0) throw std::invalid_argument("peak_layer_density: peak_count must be >= 0");
    return peak_count / (2.0 * std::numbers::pi * sigma_r * sigma_r);
}

}  // namespace stereokin
