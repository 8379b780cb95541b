#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stereokin/kinetics.hpp"
#include "stereokin/lm.hpp"
#include "stereokin/random.hpp"

namespace stereokin {

/// One measured (or synthesized) loss curve: 2D density vs time with
/// per-point uncertainties. sigma == 0 on every point means "unweighted".
struct TimeSeries {
    struct Sample {
        double t = 0.0;      // s
        double n = 0.0;      // m^-2
        double sigma = 0.0;  // m^-2
    };
    std::vector<Sample> samples;
    std::string label;

    std::size_t size() const { return samples.size(); }

    void validate() const {
        bool any_sigma = false, all_sigma = true;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].n < 0.0) throw std::invalid_argument("TimeSeries: negative density");
            if (samples[i].sigma < 0.0) throw std::invalid_argument("TimeSeries: negative sigma");
            if (samples[i].sigma > 0.0) any_sigma = true;
            else all_sigma = false;
            if (i > 0 && samples[i].t <= samples[i - 1].t)
                throw std::invalid_argument("TimeSeries: times must be strictly increasing");
        }
        if (any_sigma && !all_sigma)
            throw std::invalid_argument("TimeSeries: sigmas must be all positive or all zero");
    }

    bool weighted() const {
        return !samples.empty() && samples.front().sigma > 0.0;
    }

    std::vector<double> times() const {
        std::vector<double> out;
        out.reserve(samples.size());
        for (const auto& s : samples) out.push_back(s.t);
        return out;
    }
};

/// Fit of one dataset against n(t) = n0 / (1 + beta * n0 * t).
struct SingleBetaFit {
    double beta = 0.0;         // m^2/s
    double beta_stderr = 0.0;
    double n0 = 0.0;           // m^-2
    double n0_stderr = 0.0;
    FitResult diagnostics;     // internal (log-space) fit report
};

/// Simultaneous two-curve fit of the level-resolved loss model.
struct DualCurveFit {
    double beta2 = 0.0, beta2_stderr = 0.0;  // m^2/s
    double beta3 = 0.0, beta3_stderr = 0.0;
    double n0_thermal = 0.0, n0_heated = 0.0;  // fitted t=0 totals, m^-2
    Eigen::MatrixXd covariance;  // linear space, order (beta2, beta3, n0_thermal, n0_heated)
    FitResult diagnostics;
};

namespace detail {

inline std::vector<double> weights_for(const TimeSeries& ts) {
    std::vector<double> w(ts.size(), 1.0);
    if (ts.weighted())
        for (std::size_t i = 0; i < ts.size(); ++i) w[i] = 1.0 / ts.samples[i].sigma;
    return w;
}

// Total model density at the dataset times for the two-constant loss model.
inline std::vector<double> model_totals(double beta2, double beta3,
                                        const VibrationalDistribution& dist, double n_tot0,
                                        std::span<const double> times) {
    const int levels = static_cast<int>(dist.fractions.size());
    LevelDensities init;
    init.t = 0.0;
    init.n.resize(dist.fractions.size());
    for (std::size_t v = 0; v < dist.fractions.size(); ++v)
        init.n[v] = n_tot0 * dist.fractions[v];
    const Trajectory traj =
        integrate_loss(init, RateMatrix::two_constant(beta2, beta3, levels), times);
    return traj.totals();
}

}  // namespace detail

/// Integrate the loss model and dress it with multiplicative Gaussian noise.
/// sigma is noise_fraction times the noise-free model value; a fixed seed
/// reproduces the dataset bit for bit.
inline TimeSeries synthesize_dataset(const RateMatrix& rates, const VibrationalDistribution& dist,
                                     double n_tot0, std::span<const double> times,
                                     double noise_fraction, std::uint64_t seed,
                                     std::string label = {}) {
    if (noise_fraction < 0.0)
        throw std::invalid_argument("synthesize_dataset: noise_fraction must be >= 0");
    dist.validate(1e-9);

    LevelDensities init;
    init.t = 0.0;
    init.n.resize(dist.fractions.size());
    for (std::size_t v = 0; v < dist.fractions.size(); ++v)
        init.n[v] = n_tot0 * dist.fractions[v];
    const Trajectory traj = integrate_loss(init, rates, times);

    Rng rng(seed);
    TimeSeries ts;
    ts.label = std::move(label);
    ts.samples.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double model = traj.samples[i].total();
        double n = model;
        if (noise_fraction > 0.0) n = std::max(0.0, model * (1.0 + noise_fraction * rng.normal()));
        ts.samples.push_back({times[i], n, noise_fraction * model});
    }
    return ts;
}

/// Fit a single two-body decay n(t) = n0/(1 + beta n0 t) with (n0, beta)
/// free. Both parameters are optimized in log space to keep them positive.
inline SingleBetaFit fit_single_beta(const TimeSeries& ts, const LMOptions& lm_options = {}) {
    ts.validate();
    if (ts.size() < 3) throw std::invalid_argument("fit_single_beta: need at least 3 points");

    const std::vector<double> w = detail::weights_for(ts);
    const double n_first = std::max(ts.samples.front().n, 1.0);
    const double n_last = std::max(ts.samples.back().n, 1e-6 * n_first);
    const double t_span = ts.samples.back().t - ts.samples.front().t;

    // crude endpoint estimate of beta; floored so the log parameterization
    // starts finite even for flat data
    double beta_guess = (n_first / n_last - 1.0) / (n_first * std::max(t_span, 1e-30));
    beta_guess = std::max(beta_guess, 1e-9 / (n_first * std::max(t_span, 1e-30)));

    auto residual = [&](const Eigen::VectorXd& th) {
        const double n0 = std::exp(th[0]);
        const double beta = std::exp(th[1]);
        Eigen::VectorXd r(static_cast<Eigen::Index>(ts.size()));
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double m = analytic_two_body(n0, beta, ts.samples[i].t);
            r[static_cast<Eigen::Index>(i)] = (m - ts.samples[i].n) * w[i];
        }
        return r;
    };

    Eigen::VectorXd th0(2);
    th0 << std::log(n_first), std::log(beta_guess);
    const FitResult fr = levenberg_marquardt(residual, th0, lm_options);

    SingleBetaFit out;
    out.n0 = std::exp(fr.parameters[0]);
    out.beta = std::exp(fr.parameters[1]);
    out.n0_stderr = out.n0 * fr.stderr_of(0);   // delta method from log space
    out.beta_stderr = out.beta * fr.stderr_of(1);
    out.diagnostics = fr;
    return out;
}

/// Simultaneous fit of (beta2, beta3) to a thermal and a parametrically
/// heated loss curve. The initial level populations are fixed inputs; the two
/// t=0 total densities are free nuisance parameters. All four parameters are
/// fitted in log space.
inline DualCurveFit fit_dual_curves(const TimeSeries& ts_thermal, const TimeSeries& ts_heated,
                                    const VibrationalDistribution& dist_thermal,
                                    const VibrationalDistribution& dist_heated,
                                    const RateConstants& init, const LMOptions& lm_options = {}) {
    ts_thermal.validate();
    ts_heated.validate();
    if (ts_thermal.size() < 3 || ts_heated.size() < 3)
        throw std::invalid_argument("fit_dual_curves: need at least 3 points per curve");
    dist_thermal.validate(1e-9);
    dist_heated.validate(1e-9);
    if (dist_thermal.fractions.size() != dist_heated.fractions.size())
        throw std::invalid_argument("fit_dual_curves: distributions must cover the same levels");

    const std::vector<double> wa = detail::weights_for(ts_thermal);
    const std::vector<double> wb = detail::weights_for(ts_heated);
    const std::vector<double> ta = ts_thermal.times();
    const std::vector<double> tb = ts_heated.times();

    auto residual = [&](const Eigen::VectorXd& th) {
        const double beta2 = std::exp(th[0]);
        const double beta3 = std::exp(th[1]);
        const double n0a = std::exp(th[2]);
        const double n0b = std::exp(th[3]);
        const std::vector<double> ma = detail::model_totals(beta2, beta3, dist_thermal, n0a, ta);
        const std::vector<double> mb = detail::model_totals(beta2, beta3, dist_heated, n0b, tb);
        Eigen::VectorXd r(static_cast<Eigen::Index>(ma.size() + mb.size()));
        Eigen::Index k = 0;
        for (std::size_t i = 0; i < ma.size(); ++i)
            r[k++] = (ma[i] - ts_thermal.samples[i].n) * wa[i];
        for (std::size_t i = 0; i < mb.size(); ++i)
            r[k++] = (mb[i] - ts_heated.samples[i].n) * wb[i];
        return r;
    };

    const double bfloor = 1e-20;  // m^2/s; keeps log() finite for zero guesses
    Eigen::VectorXd th0(4);
    th0 << std::log(std::max(init.beta2, bfloor)), std::log(std::max(init.beta3, bfloor)),
        std::log(std::max(ts_thermal.samples.front().n, 1.0)),
        std::log(std::max(ts_heated.samples.front().n, 1.0));

    const FitResult fr = levenberg_marquardt(residual, th0, lm_options);

    DualCurveFit out;
    out.beta2 = std::exp(fr.parameters[0]);
    out.beta3 = std::exp(fr.parameters[1]);
    out.n0_thermal = std::exp(fr.parameters[2]);
    out.n0_heated = std::exp(fr.parameters[3]);

    // delta method: cov_linear = D cov_log D with D = diag(estimates)
    Eigen::Vector4d d;
    d << out.beta2, out.beta3, out.n0_thermal, out.n0_heated;
    out.covariance = d.asDiagonal() * fr.covariance * d.asDiagonal();
    out.beta2_stderr = std::sqrt(std::max(out.covariance(0, 0), 0.0));
    out.beta3_stderr = std::sqrt(std::max(out.covariance(1, 1), 0.0));
    out.diagnostics = fr;
    return out;
}

}  // namespace stereokin
