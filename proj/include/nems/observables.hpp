// observables.hpp - currents, reduced states, frame changes, trace distance, classical analogue

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "nems/errors.hpp"
#include "nems/fock.hpp"
#include "nems/master_equation.hpp"
#include "nems/steady_state.hpp"
#include "nems/units.hpp"

namespace nems {

struct CurrentResult {
    double current_left{0.0};
    double current_right{0.0};
    double conservation_residual{0.0}; // |I_L + I_R|
};

namespace detail {

inline void require_polaron(const BlockDensityMatrix& rho, const char* where) {
    if (rho.frame != Frame::polaron) throw FrameMismatch(std::string(where) + ": state must be in the polaron frame");
}

} // namespace detail

// I_nu = sum_{q,k,l} [r10_{qq,kl} rho1_kl - r01_{qq,kl} rho0_kl], positive when particles flow into lead nu.
inline double particle_current(std::size_t lead_index, const std::array<RedfieldTensorSet, 2>& tensors,
                               const BlockDensityMatrix& rho) {
    detail::require_polaron(rho, "particle_current");
    if (lead_index > 1) throw InvalidParameter("particle_current: lead index must be 0 or 1");
    const auto& t = tensors[lead_index];
    if (static_cast<std::size_t>(rho.levels()) != t.levels) throw DimensionError("particle_current: size mismatch");
    const std::size_t M = t.levels;
    cplx acc = 0.0;
    for (std::size_t q = 0; q < M; ++q)
        for (std::size_t k = 0; k < M; ++k)
            for (std::size_t l = 0; l < M; ++l) {
                const std::size_t idx = t.index(q, q, k, l);
                const auto kk = static_cast<Eigen::Index>(k), ll = static_cast<Eigen::Index>(l);
                acc += t.r10[idx] * rho.block1(kk, ll) - t.r01[idx] * rho.block0(kk, ll);
            }
    return acc.real();
}

// Same quantity in the main-text ordering, -sum (r01 rho0 - r10 rho1).
inline double particle_current_main_text_form(std::size_t lead_index, const std::array<RedfieldTensorSet, 2>& tensors,
                                              const BlockDensityMatrix& rho) {
    detail::require_polaron(rho, "particle_current");
    const auto& t = tensors.at(lead_index);
    const std::size_t M = t.levels;
    cplx acc = 0.0;
    for (std::size_t q = 0; q < M; ++q)
        for (std::size_t k = 0; k < M; ++k)
            for (std::size_t l = 0; l < M; ++l) {
                const std::size_t idx = t.index(q, q, k, l);
                const auto kk = static_cast<Eigen::Index>(k), ll = static_cast<Eigen::Index>(l);
                acc += t.r01[idx] * rho.block0(kk, ll) - t.r10[idx] * rho.block1(kk, ll);
            }
    return -acc.real();
}

// Current into one lead under the secular generator: out-tunneling minus in-tunneling population flow.
inline double gkls_particle_current(const SystemParams& sys, const LeadParams& lead, const Eigen::MatrixXd& D,
                                    const BlockDensityMatrix& rho) {
    detail::require_polaron(rho, "gkls_particle_current");
    const auto M = static_cast<long>(sys.levels());
    double acc = 0.0;
    for (long d = -(M - 1); d <= M - 1; ++d) {
        const double r_in = rate_in(lead, sys.mu_tilde + sys.omega * static_cast<double>(d));
        const double r_out = rate_out(lead, sys.mu_tilde - sys.omega * static_cast<double>(d));
        for (long l = 0; l < M; ++l) {
            if (l + d < 0 || l + d >= M) continue;
            acc += r_out * D(l, l + d) * D(l, l + d) * rho.block1(l, l).real();
            acc -= r_in * D(l + d, l) * D(l + d, l) * rho.block0(l, l).real();
        }
    }
    return acc;
}

inline CurrentResult make_current_result(double left, double right) {
    return {left, right, std::abs(left + right)};
}

inline CurrentResult particle_currents(const std::array<RedfieldTensorSet, 2>& tensors, const BlockDensityMatrix& rho) {
    return make_current_result(particle_current(0, tensors, rho), particle_current(1, tensors, rho));
}

inline CurrentResult gkls_particle_currents(const SystemParams& sys, const LeadPair& leads, const Eigen::MatrixXd& D,
                                            const BlockDensityMatrix& rho) {
    return make_current_result(gkls_particle_current(sys, leads[0], D, rho),
                               gkls_particle_current(sys, leads[1], D, rho));
}

// Currents in amperes for outputs that request SI units (rates are in 1e9 / s).
inline double current_in_amperes(double particle_current) {
    return particle_current * 1e9 * units::elementary_charge;
}

inline double dot_population(const BlockDensityMatrix& rho) { return rho.block1.trace().real(); }

inline Eigen::MatrixXcd reduced_qho(const BlockDensityMatrix& rho) { return rho.block0 + rho.block1; }

inline double qho_mean_occupation(const BlockDensityMatrix& rho) {
    const Eigen::MatrixXcd r = reduced_qho(rho);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < r.rows(); ++j) acc += static_cast<double>(j) * r(j, j).real();
    return acc;
}

// Inverse polaron transformation: block 1 becomes D(-lambda) rho1 D(lambda), block 0 unchanged.
// Uses the exactly unitary displacement on the truncated space.
inline BlockDensityMatrix to_lab_frame(const BlockDensityMatrix& rho, double lambda) {
    detail::require_polaron(rho, "to_lab_frame");
    BlockDensityMatrix out = rho;
    out.frame = Frame::lab;
    if (lambda != 0.0) {
        const Eigen::MatrixXd u = truncated_unitary_displacement(static_cast<std::size_t>(rho.levels()), lambda);
        out.block1 = u.transpose() * rho.block1 * u;
    }
    return out;
}

inline BlockDensityMatrix to_polaron_frame(const BlockDensityMatrix& rho, double lambda) {
    if (rho.frame != Frame::lab) throw FrameMismatch("to_polaron_frame: state must be in the lab frame");
    BlockDensityMatrix out = rho;
    out.frame = Frame::polaron;
    if (lambda != 0.0) {
        const Eigen::MatrixXd u = truncated_unitary_displacement(static_cast<std::size_t>(rho.levels()), lambda);
        out.block1 = u * rho.block1 * u.transpose();
    }
    return out;
}

// Half the trace norm of a - b over both dot blocks.
inline double trace_distance(const BlockDensityMatrix& a, const BlockDensityMatrix& b) {
    if (a.frame != b.frame) throw FrameMismatch("trace_distance: states are in different frames");
    if (a.levels() != b.levels()) throw DimensionError("trace_distance: size mismatch");
    auto nuclear = [](const Eigen::MatrixXcd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().sum();
    };
    return 0.5 * (nuclear(a.block0 - b.block0) + nuclear(a.block1 - b.block1));
}

// Eigenvalues of the full block-diagonal state, ascending.
inline Eigen::VectorXd state_spectrum(const BlockDensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e0(rho.block0, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e1(rho.block1, Eigen::EigenvaluesOnly);
    Eigen::VectorXd all(e0.eigenvalues().size() + e1.eigenvalues().size());
    all << e0.eigenvalues(), e1.eigenvalues();
    std::sort(all.data(), all.data() + all.size());
    return all;
}

// Populations-only stationary state of the Redfield equation, taken to the lab frame
// and stripped of off-diagonal elements.
inline BlockDensityMatrix classical_diagonal_analogue(const SystemParams& sys, const LeadPair& leads,
                                                      const SteadyStateOptions& opts = {}) {
    sys.validate();
    const std::size_t M = sys.levels();
    const auto d = displacement_elements(FockSpace::with_default_pad(M), sys.lambda);
    const auto tensors = redfield_tensor_pair(sys, leads, d);
    const auto n = static_cast<Eigen::Index>(2 * M);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : tensors)
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t k = 0; k < M; ++k) {
                const std::size_t idx = t.index(m, m, k, k);
                const auto mm = static_cast<Eigen::Index>(m), kk = static_cast<Eigen::Index>(k);
                const auto Mi = static_cast<Eigen::Index>(M);
                W(mm, kk) -= t.r00[idx];
                W(mm, Mi + kk) += t.r10[idx];
                W(Mi + mm, Mi + kk) -= t.r11[idx];
                W(Mi + mm, kk) += t.r01[idx];
            }
    Eigen::VectorXd xref;
    if (opts.reference) {
        xref.resize(n);
        for (std::size_t k = 0; k < M; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            xref(kk) = opts.reference->block0(kk, kk).real();
            xref(static_cast<Eigen::Index>(M) + kk) = opts.reference->block1(kk, kk).real();
        }
    }
    const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(n);
    const auto sv = detail::stationary_vector(W, ones, opts, opts.reference ? &xref : nullptr);

    auto polaron = BlockDensityMatrix::zero(M, Frame::polaron);
    for (std::size_t k = 0; k < M; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        polaron.block0(kk, kk) = sv.x(kk);
        polaron.block1(kk, kk) = sv.x(static_cast<Eigen::Index>(M) + kk);
    }
    auto lab = to_lab_frame(polaron, sys.lambda);
    lab.block0 = Eigen::MatrixXcd(lab.block0.diagonal().asDiagonal());
    lab.block1 = Eigen::MatrixXcd(lab.block1.diagonal().asDiagonal());
    return lab;
}

} // namespace nems
