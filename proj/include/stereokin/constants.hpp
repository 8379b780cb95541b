#pragma once

#include <numbers>

namespace stereokin {

/// Fundamental constants in SI units (CODATA 2018; h and k_B are exact
/// by the 2019 SI redefinition). Everything downstream works in SI and
/// converts to lab units only at the I/O boundary.
struct PhysicalConstants {
    double planck;                       // h, J s
    double hbar;                         // h / 2*pi, J s
    double boltzmann;                    // k_B, J/K
    double vacuum_permittivity_factor;   // 4*pi*eps0, C^2 / (J m)
    double atomic_mass_unit;             // u, kg
    double debye;                        // 1 D, C m
    double c6_atomic_unit;               // E_h * a0^6, J m^6
};

namespace detail {
inline constexpr double kSpeedOfLight = 299792458.0;          // m/s, exact
inline constexpr double kHartree = 4.3597447222071e-18;       // J
inline constexpr double kBohr = 5.29177210903e-11;            // m
}  // namespace detail

inline constexpr PhysicalConstants constants{
    6.62607015e-34,
    6.62607015e-34 / (2.0 * std::numbers::pi),
    1.380649e-23,
    // 4*pi*eps0 = 1e7 / c^2 (from mu0*eps0*c^2 = 1 with mu0 = 4*pi*1e-7)
    1.0e7 / (detail::kSpeedOfLight * detail::kSpeedOfLight),
    1.66053906660e-27,
    // 1 D = 1e-21 / c  C m
    1.0e-21 / detail::kSpeedOfLight,
    detail::kHartree * detail::kBohr * detail::kBohr * detail::kBohr *
        detail::kBohr * detail::kBohr * detail::kBohr,
};

// Unit conversions between the lab-facing units (nK, kHz, Debye, atomic-unit
// C6, cm^2/s, cm^3/s, cm^-2) and internal SI.
namespace units {

inline constexpr double kelvin_from_nk(double nk) { return nk * 1e-9; }
inline constexpr double nk_from_kelvin(double k) { return k * 1e9; }

inline constexpr double hz_from_khz(double khz) { return khz * 1e3; }
inline constexpr double khz_from_hz(double hz) { return hz * 1e-3; }

inline constexpr double cm_from_debye(double d) { return d * constants.debye; }
inline constexpr double debye_from_cm(double cm) { return cm / constants.debye; }

inline constexpr double jm6_from_au(double au) { return au * constants.c6_atomic_unit; }
inline constexpr double au_from_jm6(double jm6) { return jm6 / constants.c6_atomic_unit; }

inline constexpr double kg_from_u(double u) { return u * constants.atomic_mass_unit; }
inline constexpr double u_from_kg(double kg) { return kg / constants.atomic_mass_unit; }

// 2D densities and rate constants
inline constexpr double per_m2_from_per_cm2(double n) { return n * 1e4; }
inline constexpr double per_cm2_from_per_m2(double n) { return n * 1e-4; }
inline constexpr double m2ps_from_cm2ps(double b) { return b * 1e-4; }
inline constexpr double cm2ps_from_m2ps(double b) { return b * 1e4; }
inline constexpr double m3ps_from_cm3ps(double b) { return b * 1e-6; }
inline constexpr double cm3ps_from_m3ps(double b) { return b * 1e6; }

inline constexpr double joule_from_uk(double uk) { return uk * 1e-6 * constants.boltzmann; }
inline constexpr double uk_from_joule(double e) { return e / constants.boltzmann * 1e6; }

}  // namespace units

}  // namespace stereokin
