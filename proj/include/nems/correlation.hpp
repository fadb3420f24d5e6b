// correlation.hpp - bath correlation functions C00(s), C11(s) of a Lorentzian lead

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "nems/errors.hpp"
#include "nems/grid.hpp"
#include "nems/leads.hpp"

namespace nems {

struct CorrelationOptions {
    std::size_t min_points{1u << 14};
    // Largest phase advance per frequency step at the largest |s|.
    double max_phase_step{0.05};
    double decay_threshold{1e-3};
};

struct CorrelationTrace {
    int q{0};
    std::vector<double> times;
    std::vector<std::complex<double>> values;
    std::optional<double> decay_time; // empty when the trace has not decayed within the grid
    double window_half_width{0.0};
    std::size_t frequency_points{0};

    bool decayed() const { return decay_time.has_value(); }
};

namespace detail {

// exp(z) * E1(z) for complex z off the negative real axis.
inline std::complex<double> scaled_expint_e1(std::complex<double> z) {
    using cd = std::complex<double>;
    constexpr double euler_gamma = 0.57721566490153286061;
    if (std::abs(z) < 1.0) {
        cd sum = 0.0;
        cd term = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= -z / static_cast<double>(k);
            const cd add = term / static_cast<double>(k);
            sum += add;
            if (std::abs(add) < 1e-17 * std::abs(sum)) break;
        }
        return std::exp(z) * (-euler_gamma - std::log(z) - sum);
    }
    // Modified Lentz on the continued fraction e^{-z} / (z + 1 - 1/(z + 3 - 4/(z + 5 - ...))).
    const double tiny = 1e-300;
    cd b = z + 1.0;
    cd c = 1.0 / tiny;
    cd d = 1.0 / b;
    cd h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * static_cast<double>(i);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const cd del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h;
}

// Integral of exp(-i u s) * Gamma delta^2 / (u^2 + delta^2) over u in [W, inf).
inline std::complex<double> lorentz_tail(double gamma_rate, double delta, double w, double s) {
    using cd = std::complex<double>;
    if (s == 0.0) return gamma_rate * delta * (std::numbers::pi / 2.0 - std::atan(w / delta));
    if (s < 0.0) return std::conj(lorentz_tail(gamma_rate, delta, w, -s));
    // Partial fractions over the poles u = +-i delta.
    const cd z_plus(s * delta, s * w);
    const cd z_minus(-s * delta, s * w);
    // exp(+-s delta) E1(z) = exp(-i s W) * exp(z) E1(z)
    const cd term = std::polar(1.0, -s * w) * (scaled_expint_e1(z_plus) - scaled_expint_e1(z_minus));
    return gamma_rate * delta / cd(0.0, 2.0) * term;
}

} // namespace detail

// Half width W of the frequency window [gamma - W, gamma + W].
inline double correlation_window(const LeadParams& lead) {
    return std::max({50.0 * lead.lorentz_width, 20.0 * lead.temperature,
                     10.0 * std::abs(lead.chem_potential - lead.lorentz_center)});
}

// C00(s) = (1/2pi) Int e^{-i w s} Upsilon (1 - f) dw,  C11(s) = (1/2pi) Int e^{+i w s} Upsilon f dw.
// Trapezoid rule on the window plus the closed-form Lorentzian tail beyond it,
// where the Fermi factor has saturated.
inline CorrelationTrace bath_correlation(const LeadParams& lead, int q, const std::vector<double>& times,
                                         const CorrelationOptions& opts = {}) {
    lead.validate();
    if (lead.wide_band) throw InvalidParameter("bath_correlation: wide-band lead has no finite correlation function");
    if (q != 0 && q != 1) throw InvalidParameter("bath_correlation: q must be 0 or 1");
    if (times.empty()) throw InvalidParameter("bath_correlation: empty time grid");
    for (std::size_t i = 2; i < times.size(); ++i) {
        const double h0 = times[1] - times[0];
        if (std::abs((times[i] - times[i - 1]) - h0) > 1e-9 * std::max(1.0, std::abs(h0)))
            throw InvalidParameter("bath_correlation: time grid must be uniform");
    }

    using cd = std::complex<double>;
    const double w = correlation_window(lead);
    double s_max = 0.0;
    for (double s : times) s_max = std::max(s_max, std::abs(s));
    const double span = 2.0 * w;
    std::size_t n = opts.min_points;
    if (s_max > 0.0) {
        const auto needed = static_cast<std::size_t>(std::ceil(span * s_max / opts.max_phase_step));
        n = std::max(n, needed);
    }
    const double h = span / static_cast<double>(n);
    const double lo = lead.lorentz_center - w;

    std::vector<double> weights(n + 1);
    std::vector<double> freqs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = lo + h * static_cast<double>(i);
        freqs[i] = x;
        const double g = (q == 0) ? rate_out(lead, x) : rate_in(lead, x);
        weights[i] = ((i == 0 || i == n) ? 0.5 : 1.0) * h * g;
    }
    const double sign = (q == 0) ? -1.0 : 1.0;

    CorrelationTrace out;
    out.q = q;
    out.times = times;
    out.window_half_width = w;
    out.frequency_points = n + 1;
    out.values.reserve(times.size());
    for (double s : times) {
        cd acc = 0.0;
        const double phase_rate = sign * s;
        // Rotate a phasor instead of calling exp per node; renormalize to limit drift.
        const cd step = std::polar(1.0, phase_rate * h);
        cd phasor = std::polar(1.0, phase_rate * lo);
        for (std::size_t i = 0; i <= n; ++i) {
            acc += weights[i] * phasor;
            phasor *= step;
            if ((i & 1023u) == 1023u) phasor = std::polar(1.0, phase_rate * freqs[std::min(i + 1, n)]);
        }
        // q = 0 saturates above the window, q = 1 below it; both reduce to the same tail integral.
        const cd tail = detail::lorentz_tail(lead.gamma_rate, lead.lorentz_width, w, s) *
                        std::polar(1.0, sign * s * lead.lorentz_center);
        out.values.push_back((acc + tail) / (2.0 * std::numbers::pi));
    }

    // Decay time: earliest s >= 0 after which |C| stays below threshold * |C(0)|.
    double c0 = 0.0;
    bool have_zero = false;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] == 0.0) {
            c0 = std::abs(out.values[i]);
            have_zero = true;
        }
    }
    if (!have_zero) {
        const auto zero = bath_correlation(lead, q, std::vector<double>{0.0}, opts);
        c0 = std::abs(zero.values.front());
    }
    const double limit = opts.decay_threshold * c0;
    std::optional<double> candidate;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0) continue;
        if (std::abs(out.values[i]) < limit) {
            if (!candidate) candidate = times[i];
        } else {
            candidate.reset();
        }
    }
    out.decay_time = candidate;
    return out;
}

} // namespace nems
