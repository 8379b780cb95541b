#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "stereokin/constants.hpp"

namespace stereokin {

struct MoleculeSpec {
    double mass = 127.0 * constants.atomic_mass_unit;  // kg
    std::string label = "KRb";
    // van der Waals coefficient, J m^6. The default corresponds to the
    // literature KRb-KRb value of 16130 atomic units; it is a configurable
    // model input, not a measured anchor.
    double c6 = units::jm6_from_au(16130.0);

    void validate() const {
        if (mass <= 0.0) throw std::invalid_argument("MoleculeSpec: mass must be > 0");
        if (c6 <= 0.0) throw std::invalid_argument("MoleculeSpec: c6 must be > 0");
    }
};

struct TrapSpec {
    double nu_z = 23e3;                  // lattice axial frequency, Hz
    double nu_r = 36.0;                  // combined transverse frequency, Hz
    double lattice_wavelength = 1064e-9; // m

    void validate() const {
        if (nu_z <= 0.0 || nu_r <= 0.0 || lattice_wavelength <= 0.0)
            throw std::invalid_argument("TrapSpec: all frequencies and wavelength must be > 0");
    }

    double lattice_wavevector() const { return 2.0 * std::numbers::pi / lattice_wavelength; }
};

/// Discrete Gaussian layer-stack geometry of the cloud along the lattice axis.
struct StackSpec {
    double alpha0 = 0.0;            // target effective layer number; 0 = unset
    double rms_width_layers = 0.0;  // direct rms width; wins over alpha0 if set

    bool configured() const { return alpha0 > 0.0 || rms_width_layers > 0.0; }

    // alpha = 2*sqrt(pi)*w in the continuum limit; exact enough for w >~ 2.
    double width() const {
        if (rms_width_layers > 0.0) return rms_width_layers;
        if (alpha0 > 0.0) return alpha0 * std::numbers::inv_sqrtpi / 2.0;
        throw std::invalid_argument("StackSpec: neither alpha0 nor rms_width_layers set");
    }
};

struct ExperimentConfig {
    MoleculeSpec molecule;
    TrapSpec trap;
    double temperature = 800e-9;      // K
    double induced_dipole = 0.0;      // C m
    double efield = 0.0;              // V/m, informational only
    double total_molecules = 0.0;
    StackSpec stack;
    bool aho_reduced_mass = false;    // use mu = m/2 in the oscillator length

    void validate() const {
        molecule.validate();
        trap.validate();
        if (temperature < 0.0) throw std::invalid_argument("ExperimentConfig: temperature must be >= 0");
        if (induced_dipole < 0.0) throw std::invalid_argument("ExperimentConfig: induced_dipole must be >= 0");
        if (total_molecules < 0.0) throw std::invalid_argument("ExperimentConfig: total_molecules must be >= 0");
    }
};

/// Harmonic oscillator length sqrt(hbar / (m * 2*pi*nu)).
inline double harmonic_length(double mass, double frequency) {
    if (mass <= 0.0 || frequency <= 0.0)
        throw std::invalid_argument("harmonic_length: mass and frequency must be > 0");
    return std::sqrt(constants.hbar / (mass * 2.0 * std::numbers::pi * frequency));
}

/// k_B T / (h nu_z), the axial-confinement figure of merit.
inline double scaled_temperature(double temperature, double nu_z) {
    if (nu_z <= 0.0) throw std::invalid_argument("scaled_temperature: nu_z must be > 0");
    if (temperature < 0.0) throw std::invalid_argument("scaled_temperature: temperature must be >= 0");
    return constants.boltzmann * temperature / (constants.planck * nu_z);
}

/// Equipartition rms cloud radius sqrt(k_B T / (m omega_r^2)).
inline double thermal_radial_size(double temperature, double nu_r, double mass) {
    if (temperature <= 0.0 || nu_r <= 0.0 || mass <= 0.0)
        throw std::invalid_argument("thermal_radial_size: all inputs must be > 0");
    const double omega = 2.0 * std::numbers::pi * nu_r;
    return std::sqrt(constants.boltzmann * temperature / (mass * omega * omega));
}

/// Axial oscillator length for a config, honoring the reduced-mass option.
inline double axial_oscillator_length(const ExperimentConfig& cfg) {
    const double m = cfg.aho_reduced_mass ? cfg.molecule.mass / 2.0 : cfg.molecule.mass;
    return harmonic_length(m, cfg.trap.nu_z);
}

}  // namespace stereokin
