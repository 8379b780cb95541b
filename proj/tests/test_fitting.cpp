#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stereokin/constants.hpp"
#include "stereokin/fitting.hpp"
#include "stereokin/gasmodel.hpp"
#include "stereokin/parallel.hpp"

using namespace stereokin;

namespace {

std::vector<double> geomspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[size_t(i)] = a * std::pow(b / a, double(i) / (n - 1));
    return out;
}

VibrationalDistribution thermal_dist() { return boltzmann_occupancy(800e-9, 23e3, 2); }

VibrationalDistribution heated_dist() {
    auto d = thermal_dist();
    return parametric_transfer(d, 1.0 - 0.5 / d.fractions[0]);
}

}  // namespace

TEST_CASE("levenberg_marquardt on reference problems") {
    SECTION("linear model recovers the slope exactly") {
        const std::vector<double> xs = {0.0, 1.0, 2.0, 3.0, 4.0};
        auto residual = [&](const Eigen::VectorXd& p) {
            Eigen::VectorXd r(5);
            for (int i = 0; i < 5; ++i) r[i] = p[0] * xs[size_t(i)] - 3.25 * xs[size_t(i)];
            return r;
        };
        Eigen::VectorXd p0(1);
        p0 << 0.1;
        const auto fit = levenberg_marquardt(residual, p0);
        CHECK(fit.converged);
        CHECK(fit.parameters[0] == Catch::Approx(3.25).margin(1e-10));
    }
    SECTION("quadratic bowl from the origin") {
        auto residual = [](const Eigen::VectorXd& p) {
            Eigen::VectorXd r(2);
            r[0] = p[0] - 1.0;
            r[1] = p[1] - 2.0;
            return r;
        };
        Eigen::VectorXd p0(2);
        p0 << 0.0, 0.0;
        const auto fit = levenberg_marquardt(residual, p0);
        CHECK(fit.parameters[0] == Catch::Approx(1.0).margin(1e-10));
        CHECK(fit.parameters[1] == Catch::Approx(2.0).margin(1e-10));
    }
    SECTION("Rosenbrock valley from (-1.2, 1)") {
        auto residual = [](const Eigen::VectorXd& p) {
            Eigen::VectorXd r(2);
            r[0] = 10.0 * (p[1] - p[0] * p[0]);
            r[1] = 1.0 - p[0];
            return r;
        };
        Eigen::VectorXd p0(2);
        p0 << -1.2, 1.0;
        const auto fit = levenberg_marquardt(residual, p0);
        CHECK(fit.converged);
        CHECK(fit.parameters[0] == Catch::Approx(1.0).margin(1e-6));
        CHECK(fit.parameters[1] == Catch::Approx(1.0).margin(1e-6));
    }
    SECTION("accepted cost history is monotone") {
        auto residual = [](const Eigen::VectorXd& p) {
            Eigen::VectorXd r(2);
            r[0] = 10.0 * (p[1] - p[0] * p[0]);
            r[1] = 1.0 - p[0];
            return r;
        };
        Eigen::VectorXd p0(2);
        p0 << -1.2, 1.0;
        const auto fit = levenberg_marquardt(residual, p0);
        for (std::size_t i = 1; i < fit.cost_history.size(); ++i)
            CHECK(fit.cost_history[i] <= fit.cost_history[i - 1]);
    }
    SECTION("box bounds are honored") {
        auto residual = [](const Eigen::VectorXd& p) {
            Eigen::VectorXd r(1);
            r[0] = p[0] - 5.0;
            return r;
        };
        Eigen::VectorXd p0(1);
        p0 << 0.0;
        LMOptions opt;
        opt.lower = {-1.0};
        opt.upper = {2.0};
        const auto fit = levenberg_marquardt(residual, p0, opt);
        CHECK(fit.parameters[0] == Catch::Approx(2.0).margin(1e-9));
    }
}

TEST_CASE("synthesize_dataset") {
    const auto rates = RateMatrix::two_constant(units::m2ps_from_cm2ps(8e-9),
                                                units::m2ps_from_cm2ps(2e-9), 3);
    const double n0 = units::per_m2_from_per_cm2(1.15e7);
    const auto times = geomspace(0.4, 60.0, 20);

    SECTION("zero noise returns the exact model") {
        const auto ts = synthesize_dataset(rates, thermal_dist(), n0, times, 0.0, 1);
        const auto check = synthesize_dataset(rates, thermal_dist(), n0, times, 0.0, 99);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            CHECK(ts.samples[i].n == check.samples[i].n);  // seed-independent
            CHECK(ts.samples[i].sigma == 0.0);
        }
    }
    SECTION("fixed seed reproduces bitwise") {
        const auto a = synthesize_dataset(rates, thermal_dist(), n0, times, 0.05, 42);
        const auto b = synthesize_dataset(rates, thermal_dist(), n0, times, 0.05, 42);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.samples[i].n == b.samples[i].n);
        const auto c = synthesize_dataset(rates, thermal_dist(), n0, times, 0.05, 43);
        bool any_diff = false;
        for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a.samples[i].n != c.samples[i].n;
        CHECK(any_diff);
    }
    SECTION("replica mean approaches the model (law of large numbers)") {
        const auto exact = synthesize_dataset(rates, thermal_dist(), n0, times, 0.0, 0);
        const int replicas = 1000;
        std::vector<double> mean(times.size(), 0.0);
        for (int k = 0; k < replicas; ++k) {
            const auto ts = synthesize_dataset(rates, thermal_dist(), n0, times, 0.05, 1000 + k);
            for (std::size_t i = 0; i < times.size(); ++i) mean[i] += ts.samples[i].n;
        }
        for (std::size_t i = 0; i < times.size(); ++i) {
            mean[i] /= replicas;
            const double se = 0.05 * exact.samples[i].n / std::sqrt(double(replicas));
            CHECK(std::abs(mean[i] - exact.samples[i].n) < 3.0 * se);
        }
    }
}

TEST_CASE("fit_single_beta") {
    SECTION("exact analytic data recovered to 1e-8") {
        const double beta = units::m2ps_from_cm2ps(3.7e-9);
        const double n0 = units::per_m2_from_per_cm2(2.2e7);
        TimeSeries ts;
        for (double t : geomspace(0.1, 80.0, 15))
            ts.samples.push_back({t, analytic_two_body(n0, beta, t), 0.0});
        const auto fit = fit_single_beta(ts);
        CHECK(fit.beta == Catch::Approx(beta).epsilon(1e-8));
        CHECK(fit.n0 == Catch::Approx(n0).epsilon(1e-8));
    }
    SECTION("constant data drives beta to zero") {
        TimeSeries ts;
        for (int i = 0; i < 10; ++i) ts.samples.push_back({double(i), 1e11, 0.0});
        const auto fit = fit_single_beta(ts);
        // indistinguishable from no loss over the observation window
        CHECK(fit.beta * 1e11 * 9.0 < 1e-6);
    }
    SECTION("noisy recovery within 2 sigma most of the time") {
        const double beta = units::m2ps_from_cm2ps(5e-9);
        const double n0 = units::per_m2_from_per_cm2(1.5e7);
        const auto rates = RateMatrix::two_constant(0.0, beta, 1);
        const auto times = geomspace(0.2, 40.0, 15);
        int hits = 0;
        const int trials = 100;
        for (int k = 0; k < trials; ++k) {
            const auto ts = synthesize_dataset(rates, VibrationalDistribution{{1.0}}, n0, times,
                                               0.05, 500 + k);
            const auto fit = fit_single_beta(ts);
            if (std::abs(fit.beta - beta) <= 2.0 * fit.beta_stderr) ++hits;
        }
        CHECK(hits >= 90);
    }
    SECTION("insufficient data") {
        TimeSeries ts;
        ts.samples = {{0.0, 1e11, 0.0}, {1.0, 9e10, 0.0}};
        CHECK_THROWS_AS(fit_single_beta(ts), std::invalid_argument);
    }
}

TEST_CASE("fit_dual_curves") {
    const double b2 = units::m2ps_from_cm2ps(8e-9), b3 = units::m2ps_from_cm2ps(2e-9);
    const auto rates = RateMatrix::two_constant(b2, b3, 3);
    const double n0 = units::per_m2_from_per_cm2(1.15e7);
    const auto times = geomspace(0.4, 60.0, 20);
    RateConstants init;
    init.beta2 = units::m2ps_from_cm2ps(5e-9);
    init.beta3 = units::m2ps_from_cm2ps(5e-9);

    SECTION("noise-free round trip recovers both rates to 1e-5") {
        const auto ta = synthesize_dataset(rates, thermal_dist(), n0, times, 0.0, 0);
        const auto tb = synthesize_dataset(rates, heated_dist(), n0, times, 0.0, 0);
        const auto fit = fit_dual_curves(ta, tb, thermal_dist(), heated_dist(), init);
        CHECK(fit.diagnostics.converged);
        CHECK(fit.beta2 == Catch::Approx(b2).epsilon(1e-5));
        CHECK(fit.beta3 == Catch::Approx(b3).epsilon(1e-5));
        CHECK(fit.n0_thermal == Catch::Approx(n0).epsilon(1e-5));
    }
    SECTION("identical pure-ground datasets leave beta2 unidentifiable") {
        VibrationalDistribution pure{{1.0, 0.0, 0.0}};
        const auto ta = synthesize_dataset(rates, pure, n0, times, 0.0, 0);
        const auto fit = fit_dual_curves(ta, ta, pure, pure, init);
        CHECK(fit.diagnostics.condition_number > 1e6);
        CHECK(fit.diagnostics.rank_deficient);
    }
    SECTION("parameter-scaling invariance: densities x c, betas x 1/c") {
        const double c = 7.0;
        const auto ta = synthesize_dataset(rates, thermal_dist(), n0, times, 0.03, 11);
        const auto tb = synthesize_dataset(rates, heated_dist(), n0, times, 0.03, 12);
        TimeSeries sa = ta, sb = tb;
        for (auto& s : sa.samples) {
            s.n *= c;
            s.sigma *= c;
        }
        for (auto& s : sb.samples) {
            s.n *= c;
            s.sigma *= c;
        }
        const auto base = fit_dual_curves(ta, tb, thermal_dist(), heated_dist(), init);
        RateConstants init_scaled;
        init_scaled.beta2 = init.beta2 / c;
        init_scaled.beta3 = init.beta3 / c;
        const auto scaled = fit_dual_curves(sa, sb, thermal_dist(), heated_dist(), init_scaled);
        CHECK(scaled.beta2 == Catch::Approx(base.beta2 / c).epsilon(1e-8));
        CHECK(scaled.beta3 == Catch::Approx(base.beta3 / c).epsilon(1e-8));
    }
    SECTION("fewer than 3 points is an error") {
        const auto ta = synthesize_dataset(rates, thermal_dist(), n0, times, 0.0, 0);
        TimeSeries small;
        small.samples = {{0.0, n0, 0.0}, {1.0, n0 * 0.9, 0.0}};
        CHECK_THROWS_AS(fit_dual_curves(ta, small, thermal_dist(), heated_dist(), init),
                        std::invalid_argument);
    }
}

TEST_CASE("dual-curve Monte-Carlo coverage (reduced)") {
    // the acceptance suite runs the full 200-trial version
    const double b2 = units::m2ps_from_cm2ps(8e-9), b3 = units::m2ps_from_cm2ps(2e-9);
    const auto rates = RateMatrix::two_constant(b2, b3, 3);
    const double n0 = units::per_m2_from_per_cm2(1.15e7);
    const auto times = geomspace(0.4, 60.0, 20);
    RateConstants init;
    init.beta2 = units::m2ps_from_cm2ps(5e-9);
    init.beta3 = units::m2ps_from_cm2ps(5e-9);

    const int trials = 40;
    std::vector<int> ok(static_cast<std::size_t>(trials), 0);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t k) {
        const auto ta = synthesize_dataset(rates, thermal_dist(), n0, times, 0.05, 2 * k + 1);
        const auto tb = synthesize_dataset(rates, heated_dist(), n0, times, 0.05, 2 * k + 2);
        const auto fit = fit_dual_curves(ta, tb, thermal_dist(), heated_dist(), init);
        ok[k] = std::abs(fit.beta2 - b2) <= 2.0 * fit.beta2_stderr &&
                std::abs(fit.beta3 - b3) <= 2.0 * fit.beta3_stderr;
    });
    int hits = 0;
    for (int v : ok) hits += v;
    CHECK(hits >= 33);  // ~90% nominal with binomial slack on 40 trials
}
