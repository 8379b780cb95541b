#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "stereokin/gasmodel.hpp"
#include "stereokin/ode.hpp"
#include "stereokin/parallel.hpp"

namespace stereokin {

/// The three channel loss coefficients, 2D units (m^2/s).
struct RateConstants {
    double beta1 = 0.0;  // isotropic channel (distinguishable internal states)
    double beta2 = 0.0;  // interlevel (head-to-tail)
    double beta3 = 0.0;  // intralevel (side-by-side)

    void validate() const {
        if (beta1 < 0.0 || beta2 < 0.0 || beta3 < 0.0)
            throw std::invalid_argument("RateConstants: coefficients must be >= 0");
    }
};

/// Symmetric matrix of per-level-pair loss coefficients beta_{v1,v2} (m^2/s).
class RateMatrix {
public:
    RateMatrix() = default;

    explicit RateMatrix(std::vector<std::vector<double>> entries) : m_(std::move(entries)) {
        const std::size_t n = m_.size();
        for (const auto& row : m_)
            if (row.size() != n) throw std::invalid_argument("RateMatrix: must be square");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (m_[i][j] < 0.0) throw std::invalid_argument("RateMatrix: negative entry");
                if (m_[i][j] != m_[j][i]) throw std::invalid_argument("RateMatrix: must be symmetric");
            }
    }

    /// Two-constant model: beta3 on the diagonal (intralevel), beta2 off it.
    static RateMatrix two_constant(double beta2, double beta3, int levels) {
        if (levels < 1) throw std::invalid_argument("RateMatrix: need >= 1 level");
        std::vector<std::vector<double>> m(static_cast<std::size_t>(levels),
                                           std::vector<double>(static_cast<std::size_t>(levels), beta2));
        for (int v = 0; v < levels; ++v) m[static_cast<std::size_t>(v)][static_cast<std::size_t>(v)] = beta3;
        return RateMatrix(std::move(m));
    }

    int levels() const { return static_cast<int>(m_.size()); }
    double operator()(int v, int w) const {
        return m_.at(static_cast<std::size_t>(v)).at(static_cast<std::size_t>(w));
    }

private:
    std::vector<std::vector<double>> m_;
};

/// 2D densities per lattice level at one instant.
struct LevelDensities {
    double t = 0.0;               // s
    std::vector<double> n;        // m^-2, index = level v

    double total() const {
        double s = 0.0;
        for (double x : n) s += x;
        return s;
    }
};

struct Trajectory {
    std::vector<LevelDensities> samples;
    OdeStats stats;
    double rel_tol = 0.0, abs_tol = 0.0;

    std::vector<double> totals() const {
        std::vector<double> out;
        out.reserve(samples.size());
        for (const auto& s : samples) out.push_back(s.total());
        return out;
    }
};

namespace detail {
// dn_v/dt = -beta_{v,v} n_v^2 - sum_{w != v} beta_{v,w} n_v n_w, no validation.
inline void loss_derivatives(const RateMatrix& rates, const std::vector<double>& n,
                             std::vector<double>& dn) {
    const int levels = rates.levels();
    for (int v = 0; v < levels; ++v) {
        double acc = 0.0;
        for (int w = 0; w < levels; ++w) acc += rates(v, w) * n[static_cast<std::size_t>(w)];
        dn[static_cast<std::size_t>(v)] = -n[static_cast<std::size_t>(v)] * acc;
    }
}
}  // namespace detail

/// Two-body loss right-hand side for the level-resolved densities.
inline std::vector<double> loss_rhs(const LevelDensities& state, const RateMatrix& rates) {
    if (static_cast<int>(state.n.size()) != rates.levels())
        throw std::invalid_argument("loss_rhs: density/rate dimension mismatch");
    for (double nv : state.n)
        if (nv < 0.0) throw std::invalid_argument("loss_rhs: negative density");
    std::vector<double> dn(state.n.size());
    detail::loss_derivatives(rates, state.n, dn);
    return dn;
}

inline constexpr double kLossRelTol = 1e-8;
inline constexpr double kLossAbsTol = 10.0;  // m^-2, i.e. 1e-3 cm^-2

/// Integrate the loss ODEs from state n0 (at n0.t) and sample at `times`.
inline Trajectory integrate_loss(const LevelDensities& n0, const RateMatrix& rates,
                                 std::span<const double> times, double rel_tol = kLossRelTol,
                                 double abs_tol = kLossAbsTol) {
    if (static_cast<int>(n0.n.size()) != rates.levels())
        throw std::invalid_argument("integrate_loss: density/rate dimension mismatch");
    for (double nv : n0.n)
        if (nv < 0.0) throw std::invalid_argument("integrate_loss: negative initial density");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw std::invalid_argument("integrate_loss: tolerances must be > 0");

    Trajectory traj;
    traj.rel_tol = rel_tol;
    traj.abs_tol = abs_tol;
    traj.samples.resize(times.size());

    auto rhs = [&rates](double, const std::vector<double>& y, std::vector<double>& dy) {
        detail::loss_derivatives(rates, y, dy);
    };
    std::vector<double> y = n0.n;
    OdeOptions opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = abs_tol;
    traj.stats = rk45_sample(rhs, y, n0.t, times,
                             [&traj](std::size_t i, double t, const std::vector<double>& yi) {
                                 traj.samples[i] = LevelDensities{t, yi};
                             },
                             opt);
    return traj;
}

/// Closed-form single-level two-body decay n(t) = n0 / (1 + beta n0 t).
inline double analytic_two_body(double n0, double beta, double t) {
    if (n0 < 0.0 || beta < 0.0 || t < 0.0)
        throw std::invalid_argument("analytic_two_body: inputs must be >= 0");
    return n0 / (1.0 + beta * n0 * t);
}

/// Effective initial loss rate for a level mixture:
/// beta_init = beta3 * S + beta2 * (1 - S) with S = sum_v f(v)^2.
inline double effective_initial_rate(const VibrationalDistribution& dist, double beta2,
                                     double beta3) {
    dist.validate(1e-9);
    const double s = dist.purity();
    return beta3 * s + beta2 * (1.0 - s);
}

struct LayerSimResult {
    std::vector<double> times;              // s
    std::vector<Trajectory> layers;         // one level-resolved trajectory per layer
    std::vector<double> alpha;              // alpha(t)
    double alpha_time_average = 0.0;        // trapezoid mean over the window

    double layer_total(std::size_t layer, std::size_t sample) const {
        return layers[layer].samples[sample].total();
    }
};

/// Integrate the loss model independently in every lattice layer and track
/// the effective layer number alpha(t). Initial per-layer level densities are
/// N_j f(v) / (4 pi sigma_r^2) (single-layer averaged-area convention).
inline LayerSimResult simulate_layer_resolved(const LayerStack& stack,
                                              const VibrationalDistribution& dist,
                                              const RateMatrix& rates, double sigma_r,
                                              std::span<const double> times,
                                              double rel_tol = kLossRelTol,
                                              double abs_tol = kLossAbsTol) {
    dist.validate(1e-9);
    if (sigma_r <= 0.0) throw std::invalid_argument("simulate_layer_resolved: sigma_r must be > 0");
    if (times.empty()) throw std::invalid_argument("simulate_layer_resolved: no sample times");
    if (static_cast<int>(dist.fractions.size()) != rates.levels())
        throw std::invalid_argument("simulate_layer_resolved: distribution/rate dimension mismatch");

    const double area = 4.0 * std::numbers::pi * sigma_r * sigma_r;
    const std::size_t layers = stack.counts.size();

    LayerSimResult result;
    result.times.assign(times.begin(), times.end());
    result.layers.resize(layers);

    parallel_for(layers, [&](std::size_t li) {
        LevelDensities init;
        init.t = 0.0;
        init.n.resize(dist.fractions.size());
        for (std::size_t v = 0; v < dist.fractions.size(); ++v)
            init.n[v] = stack.counts[li] * dist.fractions[v] / area;
        result.layers[li] = integrate_loss(init, rates, times, rel_tol, abs_tol);
    });

    result.alpha.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t li = 0; li < layers; ++li) {
            const double nj = result.layer_total(li, i);
            s1 += nj;
            s2 += nj * nj;
        }
        result.alpha[i] = s2 > 0.0 ? s1 * s1 / s2 : 0.0;
    }

    // trapezoid time average of alpha over the sampled window
    const double span = result.times.back() - result.times.front();
    if (span > 0.0) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < times.size(); ++i)
            acc += 0.5 * (result.alpha[i] + result.alpha[i + 1]) *
                   (result.times[i + 1] - result.times[i]);
        result.alpha_time_average = acc / span;
    } else {
        result.alpha_time_average = result.alpha.front();
    }
    return result;
}

/// beta_3D = sqrt(pi) * a_ho * beta_2D.
inline double convert_beta_2d_to_3d(double beta2d, double a_ho) {
    if (beta2d < 0.0 || a_ho <= 0.0)
        throw std::invalid_argument("convert_beta_2d_to_3d: need beta2d >= 0 and a_ho > 0");
    return a_ho * beta2d / std::numbers::inv_sqrtpi;
}

inline double convert_beta_3d_to_2d(double beta3d, double a_ho) {
    if (beta3d < 0.0 || a_ho <= 0.0)
        throw std::invalid_argument("convert_beta_3d_to_2d: need beta3d >= 0 and a_ho > 0");
    return beta3d * std::numbers::inv_sqrtpi / a_ho;
}

}  // namespace stereokin
