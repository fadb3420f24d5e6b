// units.hpp - unit conventions
//
// Every energy, rate and temperature is an angular frequency in units of
// 1e9 rad/s (hbar = k_B = 1). Inputs quoted as "X/2pi GHz" are multiplied by
// 2*pi at the boundary; temperatures may also be given in millikelvin.

#pragma once

#include <cmath>
#include <numbers>

#include "nems/errors.hpp"

namespace nems::units {

inline constexpr double boltzmann = 1.380649e-23;     // J/K (exact, SI 2019)
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Cyclic GHz (the number quoted as X in "X/2pi = ... GHz") to angular units.
constexpr double from_cyclic_ghz(double ghz) { return two_pi * ghz; }

inline double temperature_from_millikelvin(double millikelvin) {
    if (!(millikelvin > 0.0) || !std::isfinite(millikelvin)) {
        throw InvalidParameter("temperature_from_millikelvin: temperature must be positive and finite");
    }
    return millikelvin * 1e-3 * boltzmann / hbar * 1e-9;
}

inline double millikelvin_from_temperature(double angular_ghz) {
    return angular_ghz * 1e9 * hbar / boltzmann * 1e3;
}

} // namespace nems::units
