#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stereokin/constants.hpp"
#include "stereokin/core.hpp"
#include "stereokin/scattering.hpp"

using namespace stereokin;

namespace {

const double kMu = units::kg_from_u(127.0) / 2.0;       // two-KRb reduced mass
const double kC6 = units::jm6_from_au(16130.0);

AdiabaticPotential pot(Channel ch, double d_debye) {
    return make_adiabatic_potential(ch, units::cm_from_debye(d_debye), kMu, kC6);
}

// closed-form p-wave barrier of A/R^2 - C6/R^6 with A = hbar^2/mu:
// R_b = (3 C6/A)^(1/4), V_b = (2/3) A / R_b^2
struct ClosedFormBarrier {
    double r_b, v_b;
};
ClosedFormBarrier pwave_barrier_oracle() {
    const double a = constants.hbar * constants.hbar / kMu;
    const double rb = std::pow(3.0 * kC6 / a, 0.25);
    return {rb, 2.0 / 3.0 * a / (rb * rb)};
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[size_t(i)] = a + (b - a) * i / (n - 1);
    return out;
}

}  // namespace

TEST_CASE("potential_value") {
    SECTION("isotropic channel is purely attractive") {
        const auto p1 = pot(Channel::isotropic, 0.15);
        for (double r = 5e-10; r < 1e-6; r *= 1.4) CHECK(potential_value(p1, r) < 0.0);
    }
    SECTION("d = 0 barrier matches the closed form: 24 uK at 14.5 nm") {
        const auto oracle = pwave_barrier_oracle();
        CHECK(oracle.r_b == Catch::Approx(14.5e-9).epsilon(3e-3));
        CHECK(units::uk_from_joule(oracle.v_b) == Catch::Approx(24.0).margin(0.5));
        const auto b = barrier(pot(Channel::side_by_side, 0.0));
        CHECK_FALSE(b.barrierless);
        CHECK(b.r_b == Catch::Approx(oracle.r_b).epsilon(1e-6));
        CHECK(b.v_b == Catch::Approx(oracle.v_b).epsilon(1e-8));
    }
    SECTION("attractive channel lies below the repulsive one in the barrier region") {
        const auto p2 = pot(Channel::head_to_tail, 0.12);
        const auto p3 = pot(Channel::side_by_side, 0.12);
        for (double r = 5e-9; r < 1e-7; r *= 1.3)
            CHECK(potential_value(p2, r) < potential_value(p3, r));
    }
    SECTION("R <= 0 rejected") {
        CHECK_THROWS_AS(potential_value(pot(Channel::isotropic, 0.0), 0.0), std::invalid_argument);
    }
    SECTION("channel sign conventions enforced") {
        AdiabaticPotential bad = pot(Channel::side_by_side, 0.1);
        bad.c3 = -bad.c3;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
}

TEST_CASE("barrier vs dipole") {
    SECTION("both barriered channels coincide at d = 0") {
        const auto b2 = barrier(pot(Channel::head_to_tail, 0.0));
        const auto b3 = barrier(pot(Channel::side_by_side, 0.0));
        CHECK(b2.v_b == Catch::Approx(b3.v_b).epsilon(1e-12));
        CHECK(units::uk_from_joule(b2.v_b) == Catch::Approx(24.3).margin(1.0));
    }
    SECTION("side-by-side barrier grows with d, head-to-tail falls") {
        double prev3 = 0.0, prev2 = 1e9;
        for (double d = 0.0; d <= 0.201; d += 0.025) {
            const double v3 = barrier(pot(Channel::side_by_side, d)).v_b;
            const double v2 = barrier(pot(Channel::head_to_tail, d)).v_b;
            if (d > 0.0) {
                CHECK(v3 > prev3);
                CHECK(v2 < prev2);
            }
            prev3 = v3;
            prev2 = v2;
        }
    }
    SECTION("isotropic channel is barrierless, not an error") {
        const auto b = barrier(pot(Channel::isotropic, 0.2));
        CHECK(b.barrierless);
        CHECK(b.v_b == 0.0);
    }
    SECTION("numerical ordering reproduces the channel taxonomy") {
        for (double d : {0.01, 0.05, 0.1, 0.15, 0.2}) {
            const double v1 = barrier(pot(Channel::isotropic, d)).v_b;
            const double v2 = barrier(pot(Channel::head_to_tail, d)).v_b;
            const double v3 = barrier(pot(Channel::side_by_side, d)).v_b;
            CHECK(v1 == 0.0);
            CHECK(v2 > v1);
            CHECK(v3 > v2);
        }
    }
}

TEST_CASE("transmission") {
    const double e800 = units::joule_from_uk(0.8);  // 800 nK

    SECTION("free particle is fully captured") {
        AdiabaticPotential free_pot;
        free_pot.channel = Channel::isotropic;
        free_pot.reduced_mass = kMu;
        free_pot.c6 = 0.0;
        const auto t = transmission(free_pot, e800);
        CHECK(t.probability == Catch::Approx(1.0).margin(1e-9));
        CHECK(t.flux_error < 1e-8);
    }
    SECTION("flux conservation below 1e-6 across channels, dipoles, energies") {
        for (Channel ch : {Channel::isotropic, Channel::head_to_tail, Channel::side_by_side})
            for (double d : {0.0, 0.1, 0.174})
                for (double t_nk : {100.0, 300.0, 800.0}) {
                    const auto t = transmission(pot(ch, d), units::joule_from_uk(t_nk * 1e-3));
                    CHECK(t.flux_error < 1e-6);
                    CHECK(t.probability >= 0.0);
                    CHECK(t.probability <= 1.0);
                }
    }
    SECTION("deep tunneling agrees with the WKB estimate within a factor of 3") {
        for (Channel ch : {Channel::head_to_tail, Channel::side_by_side})
            for (double d : {0.0, 0.05, 0.1, 0.174})
                for (double t_nk : {100.0, 300.0, 800.0}) {
                    const double e = units::joule_from_uk(t_nk * 1e-3);
                    const auto num = transmission(pot(ch, d), e);
                    if (num.over_barrier || num.probability > 1e-2) continue;
                    const auto wkb = transmission_wkb(pot(ch, d), e);
                    INFO("channel " << static_cast<int>(ch) << " d=" << d << " T=" << t_nk
                                    << "nK num=" << num.probability << " wkb=" << wkb.probability);
                    CHECK(num.probability < 1e-2);
                    CHECK(num.probability / wkb.probability > 1.0 / 3.0);
                    CHECK(num.probability / wkb.probability < 3.0);
                }
    }
    SECTION("transmission rises with energy at fixed potential") {
        const auto p3 = pot(Channel::side_by_side, 0.1);
        double prev = 0.0;
        for (double t_nk : {50.0, 150.0, 400.0, 800.0, 2000.0}) {
            const double cur = transmission(p3, units::joule_from_uk(t_nk * 1e-3)).probability;
            CHECK(cur > prev);
            prev = cur;
        }
    }
    SECTION("over-barrier energies are tagged") {
        const auto p2 = pot(Channel::head_to_tail, 0.2);  // barrier ~ 0.2 uK
        const auto t = transmission(p2, units::joule_from_uk(0.8));
        CHECK(t.over_barrier);
        CHECK(t.probability > 0.1);
    }
    SECTION("bad inputs") {
        CHECK_THROWS_AS(transmission(pot(Channel::side_by_side, 0.1), -1.0), std::invalid_argument);
        CHECK_THROWS_AS(transmission(pot(Channel::side_by_side, 0.1), e800, 20e-9),
                        std::invalid_argument);  // inside the barrier region
    }
}

TEST_CASE("rate_constant") {
    SECTION("unit transmission reproduces the closed-form capture rate") {
        AdiabaticPotential free_pot;
        free_pot.channel = Channel::isotropic;
        free_pot.reduced_mass = kMu;
        free_pot.c6 = 0.0;
        const double t_gas = 800e-9;
        const double e = constants.boltzmann * t_gas;
        const double k = std::sqrt(2.0 * kMu * e) / constants.hbar;
        const double v = constants.hbar * k / kMu;
        const double expected = std::numbers::pi / (k * k) * v;  // g = 1, L = 0, T = 1
        CHECK(rate_constant(free_pot, t_gas) == Catch::Approx(expected).epsilon(1e-8));
    }
    SECTION("side-by-side rate stays near its zero-field value") {
        const double b0 = rate_constant(pot(Channel::side_by_side, 0.0), 800e-9);
        const double b174 = rate_constant(pot(Channel::side_by_side, 0.174), 800e-9);
        CHECK(b174 / b0 <= 2.0);
    }
    SECTION("head-to-tail/side-by-side ratio grows with d") {
        double prev = 0.0;
        for (double d : {0.0, 0.05, 0.1, 0.15, 0.2}) {
            const double r = rate_constant(pot(Channel::head_to_tail, d), 800e-9) /
                             rate_constant(pot(Channel::side_by_side, d), 800e-9);
            CHECK(r >= prev * (1.0 - 1e-9));
            prev = r;
        }
        CHECK(prev > 10.0);
    }
    SECTION("channels 2 and 3 agree at d = 0 to 1e-10") {
        const double b2 = rate_constant(pot(Channel::head_to_tail, 0.0), 800e-9);
        const double b3 = rate_constant(pot(Channel::side_by_side, 0.0), 800e-9);
        CHECK(b2 == Catch::Approx(b3).epsilon(1e-10));
    }
    SECTION("thermal average stays within a factor of a few of the single-energy rate") {
        RateOptions opts;
        opts.thermal_average = true;
        opts.energy_nodes = 24;
        const double single = rate_constant(pot(Channel::side_by_side, 0.1), 800e-9);
        const double averaged = rate_constant(pot(Channel::side_by_side, 0.1), 800e-9, opts);
        CHECK(averaged > 0.2 * single);
        CHECK(averaged < 5.0 * single);
    }
}

TEST_CASE("dipole_scan") {
    SECTION("attractive channel in 3D shows the d^6 threshold scaling") {
        const auto grid = linspace(units::cm_from_debye(0.1), units::cm_from_debye(0.2), 9);
        const auto scan = dipole_scan(Channel::head_to_tail, grid, 300e-9, kMu, kC6,
                                      grid.front(), grid.back());
        CHECK(scan.slope == Catch::Approx(6.0).margin(1.5));
        // threshold-law oracle: K ~ V_b^{-3/2}; V_b ~ d^-4 within C6 corrections
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& p : scan.points) {
            const double lx = std::log(p.dipole), ly = -1.5 * std::log(p.barrier_height);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        const double n = double(scan.points.size());
        const double oracle_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CHECK(scan.slope == Catch::Approx(oracle_slope).margin(1.0));
    }
    SECTION("isotropic channel slope is ~0") {
        const auto grid = linspace(units::cm_from_debye(0.1), units::cm_from_debye(0.2), 7);
        const auto scan =
            dipole_scan(Channel::isotropic, grid, 300e-9, kMu, kC6, grid.front(), grid.back());
        CHECK(std::abs(scan.slope) < 0.05);
    }
    SECTION("side-by-side slope is negative") {
        const auto grid = linspace(units::cm_from_debye(0.1), units::cm_from_debye(0.2), 7);
        const auto scan =
            dipole_scan(Channel::side_by_side, grid, 800e-9, kMu, kC6, grid.front(), grid.back());
        CHECK(scan.slope < 0.0);
    }
    SECTION("window with too few points is an error") {
        const auto grid = linspace(units::cm_from_debye(0.1), units::cm_from_debye(0.2), 7);
        CHECK_THROWS_AS(dipole_scan(Channel::side_by_side, grid, 800e-9, kMu, kC6,
                                    units::cm_from_debye(0.10), units::cm_from_debye(0.11)),
                        std::invalid_argument);
    }
}
