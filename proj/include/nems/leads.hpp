// leads.hpp - per-lead Lorentzian spectral density, Fermi function and tunneling rates

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nems/errors.hpp"

namespace nems {

struct LeadParams {
    double gamma_rate{0.0};     // Gamma_nu
    double temperature{1.0};    // T_nu
    double chem_potential{0.0}; // mu_nu
    double lorentz_center{0.0}; // gamma_nu
    double lorentz_width{1.0};  // delta_nu
    bool wide_band{false};

    double beta() const { return 1.0 / temperature; }

    void validate() const {
        if (!(gamma_rate > 0.0) || !std::isfinite(gamma_rate))
            throw InvalidParameter("LeadParams: gamma_rate must be positive and finite");
        if (!(temperature > 0.0) || !std::isfinite(temperature))
            throw InvalidParameter("LeadParams: temperature must be positive and finite");
        if (!std::isfinite(chem_potential)) throw InvalidParameter("LeadParams: chem_potential must be finite");
        if (!std::isfinite(lorentz_center)) throw InvalidParameter("LeadParams: lorentz_center must be finite");
        if (!wide_band && (!(lorentz_width > 0.0) || !std::isfinite(lorentz_width)))
            throw InvalidParameter("LeadParams: lorentz_width must be positive and finite");
    }

    // Soft checks of the regime the master equation assumes.
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        if (gamma_rate / temperature > 0.1) out.emplace_back("gamma_rate/temperature > 0.1: outside sequential tunneling");
        if (!wide_band && lorentz_width <= gamma_rate)
            out.emplace_back("lorentz_width <= gamma_rate: Markov step may be inaccurate");
        return out;
    }
};

// Upsilon_nu(e) = Gamma delta^2 / ((e - gamma)^2 + delta^2), or Gamma in the wide-band limit.
inline double spectral_density(const LeadParams& lead, double energy) {
    if (lead.wide_band) return lead.gamma_rate;
    const double x = energy - lead.lorentz_center;
    const double d2 = lead.lorentz_width * lead.lorentz_width;
    return lead.gamma_rate * d2 / (x * x + d2);
}

// 1 / (exp(x) + 1), evaluated without overflow.
inline double fermi_factor(double x) {
    if (x > 30.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    if (x < -30.0) return 1.0 - std::exp(x) / (1.0 + std::exp(x));
    return 1.0 / (std::exp(x) + 1.0);
}

inline double fermi(const LeadParams& lead, double energy) {
    return fermi_factor((energy - lead.chem_potential) / lead.temperature);
}

// 1 - f computed as f(-x) to keep relative accuracy in the tail.
inline double fermi_complement(const LeadParams& lead, double energy) {
    return fermi_factor(-(energy - lead.chem_potential) / lead.temperature);
}

inline double rate_in(const LeadParams& lead, double energy) {
    return spectral_density(lead, energy) * fermi(lead, energy);
}

inline double rate_out(const LeadParams& lead, double energy) {
    return spectral_density(lead, energy) * fermi_complement(lead, energy);
}

} // namespace nems
