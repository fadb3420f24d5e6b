// transport.hpp - single-point steady-state transport solves, current scans and conductance maps

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nems/errors.hpp"
#include "nems/fock.hpp"
#include "nems/grid.hpp"
#include "nems/master_equation.hpp"
#include "nems/observables.hpp"
#include "nems/parallel.hpp"
#include "nems/steady_state.hpp"

namespace nems {

struct PointOptions {
    GeneratorKind kind{GeneratorKind::redfield};
    bool auto_converge{false};
    // Truncations tried in order when auto_converge is set; otherwise sys.n_fock is used.
    std::vector<std::size_t> n_fock_ladder{8, 12, 16};
    // Observables must move by less than tol * max(1, |value|) between rungs.
    double converge_tolerance{1e-6};
    SteadyStateOptions steady{};
    LiouvillianOptions liouvillian{};
};

struct PointResult {
    CurrentResult current;
    double dot_population{0.0};
    double qho_mean_occupation{0.0}; // lab frame
    Eigen::VectorXd qho_populations; // lab frame diagonal of Tr_QD rho
    double min_eigenvalue{0.0};
    double residual{0.0};
    std::size_t n_fock{0};
    bool converged{true};
    BlockDensityMatrix state; // polaron frame
};

namespace detail {

inline PointResult solve_fixed(const SystemParams& sys, const LeadPair& leads, const PointOptions& opts) {
    const std::size_t M = sys.levels();
    const auto d = displacement_elements(FockSpace::with_default_pad(M), sys.lambda);
    SteadyStateOptions steady = opts.steady;
    // A degenerate kernel (lambda = 0 conserves oscillator populations) resolves to the oscillator ground state.
    if (!steady.reference) steady.reference = BlockDensityMatrix::basis_state(M, 0, 0);

    PointResult out;
    LiouvillianOptions lopts = opts.liouvillian;
    lopts.displacement = &d;
    if (opts.kind == GeneratorKind::redfield) {
        const auto tensors = redfield_tensor_pair(sys, leads, d);
        Liouvillian L;
        L.kind = GeneratorKind::redfield;
        L.levels = M;
        detail::check_budget(M, lopts);
        const auto dim = static_cast<Eigen::Index>(2 * M * M);
        L.matrix = Eigen::MatrixXcd::Zero(dim, dim);
        detail::add_coherent_part(L.matrix, sys);
        for (const auto& t : tensors) detail::add_redfield_lead(L.matrix, t);
        const auto ss = steady_state(L, steady);
        out.state = ss.state;
        out.residual = ss.residual;
        out.min_eigenvalue = ss.min_eigenvalue;
        out.current = particle_currents(tensors, ss.state);
    } else {
        const auto L = build_liouvillian(sys, leads, GeneratorKind::gkls, lopts);
        const auto ss = steady_state(L, steady);
        out.state = ss.state;
        out.residual = ss.residual;
        out.min_eigenvalue = ss.min_eigenvalue;
        out.current = gkls_particle_currents(sys, leads, d.elements, ss.state);
    }
    out.n_fock = sys.n_fock;
    out.dot_population = dot_population(out.state);
    const auto lab = to_lab_frame(out.state, sys.lambda);
    const Eigen::MatrixXcd red = reduced_qho(lab);
    out.qho_populations = red.diagonal().real();
    out.qho_mean_occupation = qho_mean_occupation(lab);
    return out;
}

inline double observable_change(const PointResult& a, const PointResult& b) {
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::max(std::abs(x), std::abs(y))); };
    return std::max({rel(a.current.current_left, b.current.current_left),
                     rel(a.current.current_right, b.current.current_right),
                     rel(a.dot_population, b.dot_population),
                     rel(a.qho_mean_occupation, b.qho_mean_occupation)});
}

} // namespace detail

// Steady state and observables at one parameter point, optionally stepping the
// Fock truncation until the observables stop moving.
inline PointResult solve_point(const SystemParams& sys, const LeadPair& leads, const PointOptions& opts = {}) {
    sys.validate();
    for (const auto& lead : leads) lead.validate();
    if (!opts.auto_converge) return detail::solve_fixed(sys, leads, opts);
    if (opts.n_fock_ladder.empty()) throw InvalidParameter("solve_point: empty n_fock ladder");

    std::optional<PointResult> prev;
    for (std::size_t n : opts.n_fock_ladder) {
        SystemParams s = sys;
        s.n_fock = n;
        PointResult cur = detail::solve_fixed(s, leads, opts);
        if (prev && detail::observable_change(*prev, cur) < opts.converge_tolerance) {
            cur.converged = true;
            return cur;
        }
        prev = std::move(cur);
    }
    prev->converged = false;
    return *prev;
}

// Symmetric bias split mu_L = +dmu / 2, mu_R = -dmu / 2.
inline LeadPair with_bias(LeadPair leads, double delta_mu) {
    leads[0].chem_potential = 0.5 * delta_mu;
    leads[1].chem_potential = -0.5 * delta_mu;
    return leads;
}

// Central differences in the interior, one-sided at the edges.
inline std::vector<double> finite_difference(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw InvalidParameter("finite_difference: need at least two matching samples");
    std::vector<double> d(n);
    d[0] = (y[1] - y[0]) / (x[1] - x[0]);
    d[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
    return d;
}

struct ScanCurve {
    double lambda{0.0};
    std::vector<double> mu_tilde;
    std::vector<double> current_right;
    std::vector<double> sign_changes; // linearly interpolated zero crossings of I_R
    double max_abs_current{0.0};
    std::vector<std::size_t> n_fock;
};

inline std::vector<double> zero_crossings(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (y[i] == 0.0) {
            out.push_back(x[i]);
        } else if (y[i] * y[i + 1] < 0.0) {
            out.push_back(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]));
        }
    }
    if (!x.empty() && y.back() == 0.0) out.push_back(x.back());
    return out;
}

// I_R(mu_tilde) at zero bias for each lambda; the temperature imbalance of the leads drives the current.
inline std::vector<ScanCurve> thermally_driven_scan(const std::vector<double>& mu_tilde, const std::vector<double>& lambdas,
                                                    const SystemParams& base, LeadPair leads,
                                                    const PointOptions& opts = {}, std::size_t threads = 1) {
    leads = with_bias(leads, 0.0);
    const std::size_t nm = mu_tilde.size();
    const auto results = parallel_map(nm * lambdas.size(), threads, [&](std::size_t idx) {
        SystemParams s = base;
        s.lambda = lambdas[idx / nm];
        s.mu_tilde = mu_tilde[idx % nm];
        return solve_point(s, leads, opts);
    });
    std::vector<ScanCurve> curves;
    for (std::size_t a = 0; a < lambdas.size(); ++a) {
        ScanCurve c;
        c.lambda = lambdas[a];
        c.mu_tilde = mu_tilde;
        for (std::size_t i = 0; i < nm; ++i) {
            const auto& r = results[a * nm + i];
            c.current_right.push_back(r.current.current_right);
            c.n_fock.push_back(r.n_fock);
            c.max_abs_current = std::max(c.max_abs_current, std::abs(r.current.current_right));
        }
        c.sign_changes = zero_crossings(c.mu_tilde, c.current_right);
        curves.push_back(std::move(c));
    }
    return curves;
}

struct StabilityMap {
    std::vector<double> mu_tilde;        // rows
    std::vector<double> delta_mu;        // columns
    Eigen::MatrixXd current_right;       // (mu_tilde, delta_mu)
    Eigen::MatrixXd conductance;         // dI_R / d delta_mu
    double difference_step{0.0};
    double lambda{0.0};
    LeadPair leads{};
};

inline Eigen::MatrixXd conductance_from_currents(const std::vector<double>& delta_mu, const Eigen::MatrixXd& current) {
    Eigen::MatrixXd g(current.rows(), current.cols());
    for (Eigen::Index i = 0; i < current.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(current.cols()));
        for (Eigen::Index j = 0; j < current.cols(); ++j) row[static_cast<std::size_t>(j)] = current(i, j);
        const auto d = finite_difference(delta_mu, row);
        for (Eigen::Index j = 0; j < current.cols(); ++j) g(i, j) = d[static_cast<std::size_t>(j)];
    }
    return g;
}

inline StabilityMap stability_map(const std::vector<double>& mu_tilde, const std::vector<double>& delta_mu,
                                  const SystemParams& base, const LeadPair& leads, const PointOptions& opts = {},
                                  std::size_t threads = 1) {
    if (delta_mu.size() < 3) throw InvalidParameter("stability_map: bias grid too coarse for central differences");
    if (mu_tilde.empty()) throw InvalidParameter("stability_map: empty mu_tilde grid");
    const std::size_t nb = delta_mu.size();
    const auto results = parallel_map(mu_tilde.size() * nb, threads, [&](std::size_t idx) {
        SystemParams s = base;
        s.mu_tilde = mu_tilde[idx / nb];
        return solve_point(s, with_bias(leads, delta_mu[idx % nb]), opts).current.current_right;
    });
    StabilityMap map;
    map.mu_tilde = mu_tilde;
    map.delta_mu = delta_mu;
    map.lambda = base.lambda;
    map.leads = leads;
    map.difference_step = (delta_mu.back() - delta_mu.front()) / static_cast<double>(nb - 1);
    map.current_right.resize(static_cast<Eigen::Index>(mu_tilde.size()), static_cast<Eigen::Index>(nb));
    for (std::size_t i = 0; i < mu_tilde.size(); ++i)
        for (std::size_t j = 0; j < nb; ++j)
            map.current_right(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = results[i * nb + j];
    map.conductance = conductance_from_currents(delta_mu, map.current_right);
    return map;
}

// Ratio of |dI/d dmu| integrated over dmu > 0 to that over dmu < 0 (trapezoid in both directions).
// This is a summary metric for comparing the two bias polarities, not a quantity from the model.
inline double edge_asymmetry_ratio(const std::vector<double>& mu_tilde, const std::vector<double>& delta_mu,
                                   const Eigen::MatrixXd& conductance) {
    auto weight = [](const std::vector<double>& x, std::size_t i) {
        const double left = (i > 0) ? x[i] - x[i - 1] : 0.0;
        const double right = (i + 1 < x.size()) ? x[i + 1] - x[i] : 0.0;
        return 0.5 * (left + right);
    };
    double span = 0.0;
    for (double x : delta_mu) span = std::max(span, std::abs(x));
    const double zero_band = 1e-12 * span;
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < mu_tilde.size(); ++i)
        for (std::size_t j = 0; j < delta_mu.size(); ++j) {
            const double w = weight(mu_tilde, i) * weight(delta_mu, j);
            const double g = std::abs(conductance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            if (delta_mu[j] > zero_band) pos += w * g;
            else if (delta_mu[j] < -zero_band) neg += w * g;
        }
    if (neg == 0.0) return std::numeric_limits<double>::infinity();
    return pos / neg;
}

inline double edge_asymmetry_ratio(const StabilityMap& map) {
    return edge_asymmetry_ratio(map.mu_tilde, map.delta_mu, map.conductance);
}

} // namespace nems
