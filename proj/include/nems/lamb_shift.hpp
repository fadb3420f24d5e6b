// lamb_shift.hpp - imaginary (Lamb-shift) part of the half-sided bath integrals via residues

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "nems/errors.hpp"
#include "nems/leads.hpp"

namespace nems {

// Upper or lower sign of the +- in G_q(E).
enum class BranchSign { upper = +1, lower = -1 };

struct LambShiftOptions {
    double relative_tolerance{1e-12};
    std::size_t max_terms{1000000};
    // beta*delta within this distance of pi is flagged as near the pole.
    double pole_proximity{1e-3};
};

struct LambShiftValue {
    double value{0.0};
    std::size_t matsubara_terms{0};
    bool near_pole{false};
    double largest_term{0.0};
    // Lorentzian-pole and Matsubara contributions, scaled so that |value| <= |lorentz| + |matsubara|.
    std::complex<double> lorentz_residue{};
    std::complex<double> matsubara_sum{};
};

namespace detail {

// 1 / (exp(w) + 1) for complex w, overflow-safe.
inline std::complex<double> fermi_factor(std::complex<double> w) {
    if (w.real() > 0.0) {
        const auto e = std::exp(-w);
        return e / (1.0 + e);
    }
    return 1.0 / (std::exp(w) + 1.0);
}

inline void check_lamb_guard(const LeadParams& lead) {
    lead.validate();
    if (lead.wide_band) throw InvalidParameter("lamb_shift: wide-band lead has a divergent Lamb shift");
    if (!(lead.beta() * lead.lorentz_width < std::numbers::pi))
        throw GuardViolation("lamb_shift: beta*delta must be below pi");
}

} // namespace detail

// H_q(a) = PV Int g_q(y) / (y - a) dy with g_0 = Upsilon (1 - f), g_1 = Upsilon f.
// Closing the contour in the upper half plane leaves the Lorentzian pole
// gamma + i delta and the Matsubara poles mu + i pi (2k+1) / beta.
inline LambShiftValue principal_value_transform(const LeadParams& lead, int q, double a,
                                                const LambShiftOptions& opts = {}) {
    detail::check_lamb_guard(lead);
    if (q != 0 && q != 1) throw InvalidParameter("lamb_shift: q must be 0 or 1");
    if (!std::isfinite(a)) throw InvalidParameter("lamb_shift: energy must be finite");

    using cd = std::complex<double>;
    const double beta = lead.beta();
    const double g = lead.gamma_rate;
    const double d = lead.lorentz_width;
    const double fermi_sign = (q == 1) ? 1.0 : -1.0; // f for q = 1, 1 - f = f(-x) for q = 0

    auto occupation = [&](cd z) { return detail::fermi_factor(fermi_sign * beta * (z - lead.chem_potential)); };
    auto upsilon = [&](cd z) {
        const cd x = z - lead.lorentz_center;
        return g * d * d / (x * x + d * d);
    };

    const cd lorentz_pole(lead.lorentz_center, d);
    const cd lorentz_term = (g * d / cd(0.0, 2.0)) * occupation(lorentz_pole) / (lorentz_pole - a);

    // Residue of f at each Matsubara pole is -1/beta; that of 1 - f is +1/beta.
    const double residue = -fermi_sign / beta;
    cd series = 0.0;
    double largest = std::abs(lorentz_term);
    std::size_t k = 0;
    bool converged = false;
    for (; k < opts.max_terms; ++k) {
        const cd z(lead.chem_potential, std::numbers::pi * static_cast<double>(2 * k + 1) / beta);
        const cd term = residue * upsilon(z) / (z - a);
        series += term;
        largest = std::max(largest, std::abs(term));
        const double scale = std::abs(series + lorentz_term);
        if (std::abs(term) < opts.relative_tolerance * scale) {
            converged = true;
            ++k;
            break;
        }
    }
    if (!converged) throw ConvergenceError("lamb_shift: Matsubara series did not converge");

    LambShiftValue out;
    out.value = (cd(0.0, 2.0 * std::numbers::pi) * (lorentz_term + series)).real();
    out.matsubara_terms = k;
    out.largest_term = 2.0 * std::numbers::pi * largest;
    out.near_pole = (std::numbers::pi - beta * d) < opts.pole_proximity;
    out.lorentz_residue = 2.0 * std::numbers::pi * lorentz_term;
    out.matsubara_sum = 2.0 * std::numbers::pi * series;
    return out;
}

// Im G_q(E) = -+ PV Int g_q(x -+ E) / x dx / (2 pi) for the upper/lower sign.
inline LambShiftValue lamb_shift_im(const LeadParams& lead, int q, double energy, BranchSign sign,
                                    const LambShiftOptions& opts = {}) {
    const double s = static_cast<double>(static_cast<int>(sign));
    auto out = principal_value_transform(lead, q, -s * energy, opts);
    out.value *= -s / (2.0 * std::numbers::pi);
    out.largest_term /= 2.0 * std::numbers::pi;
    out.lorentz_residue /= 2.0 * std::numbers::pi;
    out.matsubara_sum /= 2.0 * std::numbers::pi;
    return out;
}

// Re G_q(E) = g_q(-+E) / 2.
inline double lamb_shift_re(const LeadParams& lead, int q, double energy, BranchSign sign) {
    const double s = static_cast<double>(static_cast<int>(sign));
    const double x = -s * energy;
    return 0.5 * ((q == 0) ? rate_out(lead, x) : rate_in(lead, x));
}

struct LambShiftBoundEntry {
    double energy{0.0};
    int q{0};
    double im{0.0};
    double re{0.0};
    double ratio{0.0}; // |Im| / |Re|, +inf when Re vanishes
    // |Im| <= |Lorentzian residue term| + |Matsubara sum| + |Re|
    double triangle_bound{0.0};
    bool ratio_exceeds_one{false};
    bool near_pole{false};
};

struct LambShiftBoundReport {
    std::vector<LambShiftBoundEntry> entries;
    bool any_ratio_exceeds_one{false};
};

// |Im G| against |Re G| on the lower branch, where Re G = rate / 2 at E.
inline LambShiftBoundReport lamb_shift_bound_report(const LeadParams& lead, const std::vector<double>& energies,
                                                    const LambShiftOptions& opts = {}) {
    detail::check_lamb_guard(lead);
    LambShiftBoundReport report;
    for (int q = 0; q <= 1; ++q) {
        for (double e : energies) {
            LambShiftBoundEntry entry;
            entry.energy = e;
            entry.q = q;
            const auto im = lamb_shift_im(lead, q, e, BranchSign::lower, opts);
            entry.im = im.value;
            entry.near_pole = im.near_pole;
            entry.re = lamb_shift_re(lead, q, e, BranchSign::lower);
            entry.ratio = (entry.re == 0.0) ? std::numeric_limits<double>::infinity()
                                            : std::abs(entry.im) / std::abs(entry.re);
            entry.ratio_exceeds_one = entry.ratio > 1.0;

            entry.triangle_bound = std::abs(im.lorentz_residue) + std::abs(im.matsubara_sum) + std::abs(entry.re);
            report.any_ratio_exceeds_one = report.any_ratio_exceeds_one || entry.ratio_exceeds_one;
            report.entries.push_back(entry);
        }
    }
    return report;
}

} // namespace nems
