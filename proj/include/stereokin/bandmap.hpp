#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "stereokin/lm.hpp"

namespace stereokin {

/// Optical-depth image. Row index = transverse position, column index =
/// axial (momentum) position after band mapping.
struct ODImage {
    std::vector<double> data;  // row-major
    int rows = 0, cols = 0;
    double pixel_size = 0.0;        // m per pixel, informational
    double momentum_per_pixel = 0.0;  // hbar*k (lattice units) per pixel along z

    double at(int r, int c) const {
        return data.at(static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                       static_cast<std::size_t>(c));
    }

    void validate() const {
        if (rows <= 0 || cols <= 0 || data.size() != static_cast<std::size_t>(rows) * cols)
            throw std::invalid_argument("ODImage: inconsistent dimensions");
        if (momentum_per_pixel <= 0.0)
            throw std::invalid_argument("ODImage: momentum calibration must be > 0");
        for (double v : data)
            if (!std::isfinite(v)) throw std::invalid_argument("ODImage: non-finite entry");
    }
};

/// 1D OD trace on a momentum axis in units of the lattice momentum hbar*k.
struct MomentumTrace {
    std::vector<double> momentum;  // hbar*k units, strictly increasing
    std::vector<double> od;

    void validate() const {
        if (momentum.size() != od.size() || momentum.empty())
            throw std::invalid_argument("MomentumTrace: axis/od size mismatch");
        for (std::size_t i = 1; i < momentum.size(); ++i)
            if (momentum[i] <= momentum[i - 1])
                throw std::invalid_argument("MomentumTrace: axis must be strictly increasing");
    }

    double span() const { return momentum.back() - momentum.front(); }
};

/// Extracted Brillouin-zone populations with fit diagnostics.
struct ZonePopulations {
    std::array<double, 3> fractions{1.0, 0.0, 0.0};
    std::array<double, 3> uncertainties{0.0, 0.0, 0.0};
    double resolution = 0.0;  // Gaussian sigma in hbar*k units
    double amplitude = 0.0;
    double offset = 0.0;
    double center = 0.0;      // hbar*k units
    double residual_norm = 0.0;
    bool converged = false;
};

namespace detail {

// Top-hat on [a, b] convolved with a unit-area Gaussian of width sigma.
inline double smeared_tophat(double x, double a, double b, double sigma) {
    if (sigma <= 0.0) return (x >= a && x < b) ? 1.0 : 0.0;
    const double inv = 1.0 / (std::numbers::sqrt2_v<double> * sigma);
    return 0.5 * (std::erf((x - a) * inv) - std::erf((x - b) * inv));
}

// Gaussian fit of the transverse marginal; returns (center_row, rms, ok).
struct MarginalFit {
    double center = 0.0;
    double rms = 0.0;
    bool ok = false;
};

inline MarginalFit fit_transverse_marginal(const ODImage& image) {
    std::vector<double> marginal(static_cast<std::size_t>(image.rows), 0.0);
    for (int r = 0; r < image.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < image.cols; ++c) s += image.at(r, c);
        marginal[static_cast<std::size_t>(r)] = s;
    }
    const double floor = *std::min_element(marginal.begin(), marginal.end());

    auto residual = [&](const Eigen::VectorXd& th) {
        const double amp = th[0], mu = th[1], sig = std::exp(th[2]), off = th[3];
        Eigen::VectorXd r(image.rows);
        for (int i = 0; i < image.rows; ++i) {
            const double z = (i - mu) / sig;
            r[i] = amp * std::exp(-0.5 * z * z) + off - marginal[static_cast<std::size_t>(i)];
        }
        return r;
    };

    // moment-based start
    double w = 0.0, m1 = 0.0;
    for (int i = 0; i < image.rows; ++i) {
        const double v = std::max(marginal[static_cast<std::size_t>(i)] - floor, 0.0);
        w += v;
        m1 += v * i;
    }
    MarginalFit out;
    if (w <= 0.0) {  // featureless image: fall back to the geometric center
        out.center = 0.5 * (image.rows - 1);
        out.rms = image.rows / 4.0;
        return out;
    }
    const double mu0 = m1 / w;
    double m2 = 0.0;
    for (int i = 0; i < image.rows; ++i)
        m2 += std::max(marginal[static_cast<std::size_t>(i)] - floor, 0.0) * (i - mu0) * (i - mu0);
    const double sig0 = std::max(std::sqrt(m2 / w), 0.5);

    Eigen::VectorXd th0(4);
    th0 << *std::max_element(marginal.begin(), marginal.end()) - floor, mu0, std::log(sig0), floor;
    const FitResult fr = levenberg_marquardt(residual, th0);
    out.center = fr.parameters[1];
    out.rms = std::exp(fr.parameters[2]);
    out.ok = fr.converged && out.rms > 0.0;
    if (!out.ok) {
        out.center = mu0;
        out.rms = sig0;
    }
    return out;
}

}  // namespace detail

/// Mean of the OD rows within +-1 rms width of the (Gaussian-fitted) cloud
/// center. The momentum axis is centered on the middle column.
inline MomentumTrace transverse_average(const ODImage& image, double rms_width) {
    image.validate();
    if (rms_width <= 0.0) throw std::invalid_argument("transverse_average: rms_width must be > 0");

    const detail::MarginalFit marginal = detail::fit_transverse_marginal(image);
    const int lo = static_cast<int>(std::ceil(marginal.center - rms_width));
    const int hi = static_cast<int>(std::floor(marginal.center + rms_width));
    if (lo < 0 || hi >= image.rows || lo > hi)
        throw std::out_of_range("transverse_average: averaging window leaves the image");

    MomentumTrace trace;
    trace.momentum.resize(static_cast<std::size_t>(image.cols));
    trace.od.assign(static_cast<std::size_t>(image.cols), 0.0);
    const double mid = 0.5 * (image.cols - 1);
    for (int c = 0; c < image.cols; ++c)
        trace.momentum[static_cast<std::size_t>(c)] = (c - mid) * image.momentum_per_pixel;
    for (int r = lo; r <= hi; ++r)
        for (int c = 0; c < image.cols; ++c)
            trace.od[static_cast<std::size_t>(c)] += image.at(r, c);
    const double rows = static_cast<double>(hi - lo + 1);
    for (double& v : trace.od) v /= rows;
    return trace;
}

/// Band-mapped momentum profile: one top-hat per Brillouin zone (v = 0 on
/// [-1, 1] hbar*k, v = 1 on +-[1, 2], v = 2 on +-[2, 3]), each of area
/// proportional to its fraction, convolved with a Gaussian resolution kernel.
inline MomentumTrace model_trace(const std::array<double, 3>& fractions, double sigma,
                                 double amplitude, double offset,
                                 std::span<const double> momentum_grid, double center = 0.0) {
    if (sigma < 0.0) throw std::invalid_argument("model_trace: sigma must be >= 0");
    MomentumTrace trace;
    trace.momentum.assign(momentum_grid.begin(), momentum_grid.end());
    trace.od.resize(momentum_grid.size());
    for (std::size_t i = 0; i < momentum_grid.size(); ++i) {
        const double x = momentum_grid[i] - center;
        // each zone has total width 2, so the top-hat height is f/2
        double v = fractions[0] / 2.0 * detail::smeared_tophat(x, -1.0, 1.0, sigma);
        v += fractions[1] / 2.0 *
             (detail::smeared_tophat(x, -2.0, -1.0, sigma) + detail::smeared_tophat(x, 1.0, 2.0, sigma));
        v += fractions[2] / 2.0 *
             (detail::smeared_tophat(x, -3.0, -2.0, sigma) + detail::smeared_tophat(x, 2.0, 3.0, sigma));
        trace.od[i] = amplitude * v + offset;
    }
    return trace;
}

struct PopulationFitOptions {
    double fixed_sigma = -1.0;  // >= 0 pins the resolution instead of fitting it
    double sigma_init = 0.15;   // hbar*k
};

/// Extract (n0, n1, n2)/n_tot from a band-map trace by least squares against
/// model_trace. Fractions are parametrized through a softmax so they stay
/// normalized exactly; sigma, amplitude, offset and center float unless the
/// resolution is pinned.
inline ZonePopulations fit_populations(const MomentumTrace& trace,
                                       const PopulationFitOptions& options = {}) {
    trace.validate();
    if (trace.momentum.front() > -3.0 || trace.momentum.back() < 3.0)
        throw std::invalid_argument("fit_populations: trace must span at least +-3 hbar*k");

    const bool fit_sigma = options.fixed_sigma < 0.0;
    const double od_min = *std::min_element(trace.od.begin(), trace.od.end());
    const double od_max = *std::max_element(trace.od.begin(), trace.od.end());
    const double dx = trace.momentum[1] - trace.momentum[0];
    double area = 0.0;
    for (double v : trace.od) area += (v - od_min) * dx;

    auto unpack = [&](const Eigen::VectorXd& th, std::array<double, 3>& f, double& sigma,
                      double& amp, double& off, double& cen) {
        const double e1 = std::exp(th[0]), e2 = std::exp(th[1]);
        const double z = 1.0 + e1 + e2;
        f = {1.0 / z, e1 / z, e2 / z};
        amp = std::exp(th[2]);
        off = th[3];
        cen = th[4];
        sigma = fit_sigma ? std::exp(th[5]) : options.fixed_sigma;
    };

    auto residual = [&](const Eigen::VectorXd& th) {
        std::array<double, 3> f;
        double sigma, amp, off, cen;
        unpack(th, f, sigma, amp, off, cen);
        const MomentumTrace m = model_trace(f, sigma, amp, off, trace.momentum, cen);
        Eigen::VectorXd r(static_cast<Eigen::Index>(trace.od.size()));
        for (std::size_t i = 0; i < trace.od.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = m.od[i] - trace.od[i];
        return r;
    };

    Eigen::VectorXd th0(fit_sigma ? 6 : 5);
    th0[0] = std::log(0.25);  // mild excited-zone seed
    th0[1] = std::log(0.10);
    th0[2] = std::log(std::max(area, 1e-12 * std::max(od_max - od_min, 1e-300)));
    th0[3] = od_min;
    th0[4] = 0.0;
    if (fit_sigma) th0[5] = std::log(options.sigma_init);

    const FitResult fr = levenberg_marquardt(residual, th0);

    ZonePopulations out;
    double sigma, amp, off, cen;
    unpack(fr.parameters, out.fractions, sigma, amp, off, cen);
    out.resolution = sigma;
    out.amplitude = amp;
    out.offset = off;
    out.center = cen;
    out.residual_norm = std::sqrt(fr.chi2);
    out.converged = fr.converged;

    // delta method through the softmax for the fraction uncertainties
    const double e1 = std::exp(fr.parameters[0]), e2 = std::exp(fr.parameters[1]);
    const double z = 1.0 + e1 + e2;
    Eigen::Matrix<double, 3, 2> jac;
    jac(0, 0) = -e1 / (z * z);
    jac(0, 1) = -e2 / (z * z);
    jac(1, 0) = e1 * (z - e1) / (z * z);
    jac(1, 1) = -e1 * e2 / (z * z);
    jac(2, 0) = -e1 * e2 / (z * z);
    jac(2, 1) = e2 * (z - e2) / (z * z);
    const Eigen::Matrix2d cov_theta = fr.covariance.topLeftCorner<2, 2>();
    const Eigen::Matrix3d cov_f = jac * cov_theta * jac.transpose();
    for (int i = 0; i < 3; ++i) out.uncertainties[static_cast<std::size_t>(i)] =
        std::sqrt(std::max(cov_f(i, i), 0.0));
    return out;
}

}  // namespace stereokin
