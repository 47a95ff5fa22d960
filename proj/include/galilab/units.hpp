// units.hpp — SI <-> natural-unit conversion at the library boundary.
//
// Internally everything runs in hbar = k_B = 1 with a reference mass and a
// reference frequency; this struct is only used where laboratory numbers
// (Hz, Kelvin, kg, seconds) enter or leave.

#pragma once

#include <stdexcept>

namespace galilab {

inline constexpr double kHbarSI = 1.054571817e-34;      // J s
inline constexpr double kBoltzmannSI = 1.380649e-23;    // J / K

struct UnitSystem {
    double mass_kg = 1.0;    // natural mass unit in kg
    double freq_hz = 1.0;    // natural frequency unit in rad/s

    UnitSystem(double mass_kg_, double freq_hz_) : mass_kg(mass_kg_), freq_hz(freq_hz_) {
        if (!(mass_kg > 0.0) || !(freq_hz > 0.0))
            throw std::invalid_argument("UnitSystem: reference scales must be > 0");
    }

    // frequencies / rates
    double freq_to_natural(double hz) const { return hz / freq_hz; }
    double freq_to_si(double nat) const { return nat * freq_hz; }

    // times
    double time_to_natural(double s) const { return s * freq_hz; }
    double time_to_si(double nat) const { return nat / freq_hz; }

    // energies (natural unit: hbar * freq)
    double energy_to_natural(double joule) const { return joule / (kHbarSI * freq_hz); }
    double energy_to_si(double nat) const { return nat * kHbarSI * freq_hz; }

    // temperatures (natural unit: hbar * freq / k_B; natural value is k_B*T)
    double temperature_to_natural(double kelvin) const {
        return kelvin * kBoltzmannSI / (kHbarSI * freq_hz);
    }
    double temperature_to_si(double nat) const {
        return nat * kHbarSI * freq_hz / kBoltzmannSI;
    }

    // masses
    double mass_to_natural(double kg) const { return kg / mass_kg; }
    double mass_to_si(double nat) const { return nat * mass_kg; }
};

}  // namespace galilab
