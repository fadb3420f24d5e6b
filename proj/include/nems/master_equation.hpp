// master_equation.hpp - projected Redfield and secular (GKLS) generators for the dot + oscillator

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nems/errors.hpp"
#include "nems/fock.hpp"
#include "nems/leads.hpp"

namespace nems {

using cplx = std::complex<double>;

struct SystemParams {
    double mu_tilde{0.0}; // renormalized dot level mu - omega lambda^2
    double omega{1.0};
    double lambda{0.0};   // g / omega
    std::size_t n_fock{8}; // truncation index N, states |0> ... |N>

    static SystemParams from_bare(double mu, double omega, double g, std::size_t n_fock) {
        if (!(omega > 0.0)) throw InvalidParameter("SystemParams: omega must be positive");
        const double lam = g / omega;
        return SystemParams{mu - omega * lam * lam, omega, lam, n_fock};
    }

    double mu_bare() const { return mu_tilde + omega * lambda * lambda; }
    double coupling_g() const { return lambda * omega; }
    std::size_t levels() const { return n_fock + 1; }

    void validate() const {
        if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidParameter("SystemParams: omega must be positive");
        if (!std::isfinite(mu_tilde)) throw InvalidParameter("SystemParams: mu_tilde must be finite");
        if (!std::isfinite(lambda)) throw InvalidParameter("SystemParams: lambda must be finite");
        if (n_fock < 1) throw InvalidParameter("SystemParams: n_fock must be at least 1");
    }
};

// Left lead at index 0, right lead at index 1.
using LeadPair = std::array<LeadParams, 2>;

enum class Frame { polaron, lab };

inline const char* frame_name(Frame f) { return f == Frame::polaron ? "polaron" : "lab"; }

// Dot-diagonal density matrix: block_n = <j|rho^n|m> for dot occupation n.
struct BlockDensityMatrix {
    Eigen::MatrixXcd block0;
    Eigen::MatrixXcd block1;
    Frame frame{Frame::polaron};

    Eigen::Index levels() const { return block0.rows(); }
    cplx total_trace() const { return block0.trace() + block1.trace(); }

    static BlockDensityMatrix zero(std::size_t levels, Frame frame = Frame::polaron) {
        const auto n = static_cast<Eigen::Index>(levels);
        return {Eigen::MatrixXcd::Zero(n, n), Eigen::MatrixXcd::Zero(n, n), frame};
    }

    // |n, k><n, k|
    static BlockDensityMatrix basis_state(std::size_t levels, int n, std::size_t k, Frame frame = Frame::polaron) {
        auto out = zero(levels, frame);
        auto& b = (n == 0) ? out.block0 : out.block1;
        b(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
        return out;
    }

    void hermitize() {
        block0 = 0.5 * (block0 + block0.adjoint()).eval();
        block1 = 0.5 * (block1 + block1.adjoint()).eval();
    }

    double hermiticity_error() const {
        return std::max((block0 - block0.adjoint()).cwiseAbs().maxCoeff(),
                        (block1 - block1.adjoint()).cwiseAbs().maxCoeff());
    }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e0(block0, Eigen::EigenvaluesOnly);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e1(block1, Eigen::EigenvaluesOnly);
        return std::min(e0.eigenvalues().minCoeff(), e1.eigenvalues().minCoeff());
    }
};

// eps_kl = mu_tilde - omega (k - l)
inline double energy_gap(const SystemParams& sys, std::size_t k, std::size_t l) {
    if (k > sys.n_fock || l > sys.n_fock) throw InvalidParameter("energy_gap: index out of range");
    return sys.mu_tilde - sys.omega * (static_cast<double>(k) - static_cast<double>(l));
}

// Rank-4 tensors of one lead, stored flat with index ((j M + m) M + k) M + l.
//   r00: loss of block 0 (tunneling in)    r11: loss of block 1 (tunneling out)
//   r01: gain of block 1 from block 0      r10: gain of block 0 from block 1
struct RedfieldTensorSet {
    std::size_t levels{0};
    std::vector<double> r00, r01, r11, r10;

    std::size_t index(std::size_t j, std::size_t m, std::size_t k, std::size_t l) const {
        return ((j * levels + m) * levels + k) * levels + l;
    }
};

inline RedfieldTensorSet redfield_tensors(const SystemParams& sys, const LeadParams& lead, const DisplacementMatrix& d) {
    sys.validate();
    lead.validate();
    const std::size_t M = sys.levels();
    if (static_cast<std::size_t>(d.size()) != M) throw DimensionError("redfield_tensors: displacement size mismatch");

    // Transition rates between polaron levels, rin(k, i) = rate_in(eps_ki), rout(i, k) = rate_out(eps_ik).
    Eigen::MatrixXd rin(M, M), rout(M, M);
    for (std::size_t a = 0; a < M; ++a)
        for (std::size_t b = 0; b < M; ++b) {
            const double e = energy_gap(sys, a, b);
            rin(a, b) = rate_in(lead, e);
            rout(a, b) = rate_out(lead, e);
        }
    const Eigen::MatrixXd& D = d.elements;
    // A_jk = sum_i D_ij D_ik rate_in(eps_ki),  B_jk = sum_i D_ji D_ki rate_out(eps_ik)
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M), B = Eigen::MatrixXd::Zero(M, M);
    for (std::size_t j = 0; j < M; ++j)
        for (std::size_t k = 0; k < M; ++k) {
            double a = 0.0, b = 0.0;
            for (std::size_t i = 0; i < M; ++i) {
                a += D(i, j) * D(i, k) * rin(k, i);
                b += D(j, i) * D(k, i) * rout(i, k);
            }
            A(j, k) = a;
            B(j, k) = b;
        }

    RedfieldTensorSet t;
    t.levels = M;
    const std::size_t n4 = M * M * M * M;
    t.r00.assign(n4, 0.0);
    t.r11.assign(n4, 0.0);
    t.r01.assign(n4, 0.0);
    t.r10.assign(n4, 0.0);
    for (std::size_t j = 0; j < M; ++j)
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t k = 0; k < M; ++k)
                for (std::size_t l = 0; l < M; ++l) {
                    const std::size_t idx = t.index(j, m, k, l);
                    double a = 0.0, b = 0.0;
                    if (m == l) {
                        a += A(j, k);
                        b += B(j, k);
                    }
                    if (k == j) {
                        a += A(m, l);
                        b += B(m, l);
                    }
                    t.r00[idx] = 0.5 * a;
                    t.r11[idx] = 0.5 * b;
                    t.r01[idx] = 0.5 * D(j, k) * D(m, l) * (rin(k, j) + rin(l, m));
                    t.r10[idx] = 0.5 * D(k, j) * D(l, m) * (rout(j, k) + rout(m, l));
                }
    return t;
}

enum class GeneratorKind { redfield, gkls };

inline const char* kind_name(GeneratorKind k) { return k == GeneratorKind::redfield ? "redfield" : "gkls"; }

struct LiouvillianOptions {
    // Upper bound on the dense complex generator storage.
    std::size_t memory_budget_bytes{std::size_t{2} << 30};
    // Reuse a displacement matrix already built for sys.lambda (optional).
    const DisplacementMatrix* displacement{nullptr};
};

// Dense generator on vec(rho) with index n M^2 + j M + m.
struct Liouvillian {
    Eigen::MatrixXcd matrix;
    GeneratorKind kind{GeneratorKind::redfield};
    std::size_t levels{0};

    Eigen::Index dim() const { return matrix.rows(); }
};

inline Eigen::Index state_index(std::size_t levels, int n, std::size_t j, std::size_t m) {
    return static_cast<Eigen::Index>(static_cast<std::size_t>(n) * levels * levels + j * levels + m);
}

inline Eigen::VectorXcd vectorize(const BlockDensityMatrix& rho) {
    const std::size_t M = static_cast<std::size_t>(rho.levels());
    Eigen::VectorXcd v(2 * M * M);
    for (std::size_t j = 0; j < M; ++j)
        for (std::size_t m = 0; m < M; ++m) {
            const auto jj = static_cast<Eigen::Index>(j), mm = static_cast<Eigen::Index>(m);
            v(state_index(M, 0, j, m)) = rho.block0(jj, mm);
            v(state_index(M, 1, j, m)) = rho.block1(jj, mm);
        }
    return v;
}

inline BlockDensityMatrix devectorize(const Eigen::VectorXcd& v, std::size_t levels, Frame frame = Frame::polaron) {
    if (static_cast<std::size_t>(v.size()) != 2 * levels * levels) throw DimensionError("devectorize: size mismatch");
    auto out = BlockDensityMatrix::zero(levels, frame);
    for (std::size_t j = 0; j < levels; ++j)
        for (std::size_t m = 0; m < levels; ++m) {
            const auto jj = static_cast<Eigen::Index>(j), mm = static_cast<Eigen::Index>(m);
            out.block0(jj, mm) = v(state_index(levels, 0, j, m));
            out.block1(jj, mm) = v(state_index(levels, 1, j, m));
        }
    return out;
}

namespace detail {

inline void check_budget(std::size_t levels, const LiouvillianOptions& opts) {
    const double dim = 2.0 * static_cast<double>(levels) * static_cast<double>(levels);
    if (dim * dim * sizeof(cplx) > static_cast<double>(opts.memory_budget_bytes))
        throw DimensionError("build_liouvillian: generator exceeds the configured memory budget");
}

inline void add_coherent_part(Eigen::MatrixXcd& L, const SystemParams& sys) {
    const std::size_t M = sys.levels();
    for (int n = 0; n <= 1; ++n)
        for (std::size_t j = 0; j < M; ++j)
            for (std::size_t m = 0; m < M; ++m) {
                const auto p = state_index(M, n, j, m);
                L(p, p) += cplx(0.0, -sys.omega * (static_cast<double>(j) - static_cast<double>(m)));
            }
}

inline void add_redfield_lead(Eigen::MatrixXcd& L, const RedfieldTensorSet& t) {
    const std::size_t M = t.levels;
    // Column-major traversal: rows (j, m) innermost.
    for (std::size_t k = 0; k < M; ++k)
        for (std::size_t l = 0; l < M; ++l) {
            const auto c0 = state_index(M, 0, k, l), c1 = state_index(M, 1, k, l);
            auto col0 = L.col(c0);
            auto col1 = L.col(c1);
            for (std::size_t j = 0; j < M; ++j)
                for (std::size_t m = 0; m < M; ++m) {
                    const std::size_t idx = t.index(j, m, k, l);
                    const auto r0 = state_index(M, 0, j, m), r1 = state_index(M, 1, j, m);
                    col0(r0) -= t.r00[idx];
                    col1(r0) += t.r10[idx];
                    col1(r1) -= t.r11[idx];
                    col0(r1) += t.r01[idx];
                }
        }
}

// Secular generator with exactly degenerate Bohr frequencies merged. Channels are
// labelled by the oscillator shift d of a tunneling event:
//   in,  empty l -> full l + d, energy mu_tilde + omega d, amplitude D_{l+d, l}
//   out, full l -> empty l + d, energy mu_tilde - omega d, amplitude D_{l, l+d}
inline void add_gkls_lead(Eigen::MatrixXcd& L, const SystemParams& sys, const LeadParams& lead, const Eigen::MatrixXd& D) {
    const auto M = static_cast<long>(sys.levels());
    auto in_range = [M](long i) { return i >= 0 && i < M; };
    for (long d = -(M - 1); d <= M - 1; ++d) {
        const double r_in = rate_in(lead, sys.mu_tilde + sys.omega * static_cast<double>(d));
        const double r_out = rate_out(lead, sys.mu_tilde - sys.omega * static_cast<double>(d));
        for (long j = 0; j < M; ++j)
            for (long m = 0; m < M; ++m) {
                const auto uj = static_cast<std::size_t>(j), um = static_cast<std::size_t>(m);
                const auto row0 = state_index(sys.levels(), 0, uj, um);
                const auto row1 = state_index(sys.levels(), 1, uj, um);
                // Loss: -1/2 {J^dag J, rho}
                double loss_in = 0.0, loss_out = 0.0;
                if (in_range(j + d)) loss_in += D(j + d, j) * D(j + d, j);
                if (in_range(m + d)) loss_in += D(m + d, m) * D(m + d, m);
                if (in_range(j + d)) loss_out += D(j, j + d) * D(j, j + d);
                if (in_range(m + d)) loss_out += D(m, m + d) * D(m, m + d);
                L(row0, row0) -= 0.5 * r_in * loss_in;
                L(row1, row1) -= 0.5 * r_out * loss_out;
                // Gain: J rho J^dag
                if (in_range(j - d) && in_range(m - d)) {
                    const auto sj = static_cast<std::size_t>(j - d), sm = static_cast<std::size_t>(m - d);
                    L(row1, state_index(sys.levels(), 0, sj, sm)) += r_in * D(j, j - d) * D(m, m - d);
                    L(row0, state_index(sys.levels(), 1, sj, sm)) += r_out * D(j - d, j) * D(m - d, m);
                }
            }
    }
}

} // namespace detail

inline std::array<RedfieldTensorSet, 2> redfield_tensor_pair(const SystemParams& sys, const LeadPair& leads,
                                                             const DisplacementMatrix& d) {
    return {redfield_tensors(sys, leads[0], d), redfield_tensors(sys, leads[1], d)};
}

inline Liouvillian build_liouvillian(const SystemParams& sys, const LeadPair& leads, GeneratorKind kind,
                                     const LiouvillianOptions& opts = {}) {
    sys.validate();
    for (const auto& lead : leads) lead.validate();
    const std::size_t M = sys.levels();
    detail::check_budget(M, opts);

    DisplacementMatrix local;
    const DisplacementMatrix* d = opts.displacement;
    if (d == nullptr || d->lambda != sys.lambda || static_cast<std::size_t>(d->size()) != M) {
        local = displacement_elements(FockSpace::with_default_pad(M), sys.lambda);
        d = &local;
    }

    Liouvillian out;
    out.kind = kind;
    out.levels = M;
    const auto dim = static_cast<Eigen::Index>(2 * M * M);
    out.matrix = Eigen::MatrixXcd::Zero(dim, dim);
    detail::add_coherent_part(out.matrix, sys);
    for (const auto& lead : leads) {
        if (kind == GeneratorKind::redfield)
            detail::add_redfield_lead(out.matrix, redfield_tensors(sys, lead, *d));
        else
            detail::add_gkls_lead(out.matrix, sys, lead, d->elements);
    }
    return out;
}

inline BlockDensityMatrix apply_generator(const Liouvillian& L, const BlockDensityMatrix& rho) {
    if (static_cast<std::size_t>(rho.levels()) != L.levels) throw DimensionError("apply_generator: size mismatch");
    if (rho.frame != Frame::polaron) throw FrameMismatch("apply_generator: state must be in the polaron frame");
    return devectorize(L.matrix * vectorize(rho), L.levels, Frame::polaron);
}

// Real coordinates of a state with hermitian blocks: for each block, entry (j, m)
// stores Re rho_jm when j <= m and Im rho_mj when j > m.
inline Eigen::VectorXd to_real_coordinates(const BlockDensityMatrix& rho) {
    const std::size_t M = static_cast<std::size_t>(rho.levels());
    Eigen::VectorXd x(2 * M * M);
    for (int n = 0; n <= 1; ++n) {
        const auto& b = (n == 0) ? rho.block0 : rho.block1;
        for (std::size_t j = 0; j < M; ++j)
            for (std::size_t m = 0; m < M; ++m) {
                const auto jj = static_cast<Eigen::Index>(j), mm = static_cast<Eigen::Index>(m);
                x(state_index(M, n, j, m)) = (j <= m) ? b(jj, mm).real() : b(mm, jj).imag();
            }
    }
    return x;
}

inline BlockDensityMatrix from_real_coordinates(const Eigen::VectorXd& x, std::size_t levels,
                                                Frame frame = Frame::polaron) {
    if (static_cast<std::size_t>(x.size()) != 2 * levels * levels)
        throw DimensionError("from_real_coordinates: size mismatch");
    auto out = BlockDensityMatrix::zero(levels, frame);
    for (int n = 0; n <= 1; ++n) {
        auto& b = (n == 0) ? out.block0 : out.block1;
        for (std::size_t j = 0; j < levels; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            b(jj, jj) = x(state_index(levels, n, j, j));
            for (std::size_t m = j + 1; m < levels; ++m) {
                const auto mm = static_cast<Eigen::Index>(m);
                const cplx v(x(state_index(levels, n, j, m)), x(state_index(levels, n, m, j)));
                b(jj, mm) = v;
                b(mm, jj) = std::conj(v);
            }
        }
    }
    return out;
}

// The generator restricted to hermitian-block states, in real coordinates.
inline Eigen::MatrixXd real_generator(const Liouvillian& L) {
    const std::size_t M = L.levels;
    const Eigen::Index dim = L.dim();
    Eigen::MatrixXd R(dim, dim);
    for (int n = 0; n <= 1; ++n)
        for (std::size_t a = 0; a < M; ++a)
            for (std::size_t b = 0; b < M; ++b) {
                const auto q = state_index(M, n, a, b);
                // Column of the complex vector produced by real coordinate q.
                Eigen::VectorXcd col;
                if (a == b) {
                    col = L.matrix.col(q);
                } else if (a < b) {
                    col = L.matrix.col(state_index(M, n, a, b)) + L.matrix.col(state_index(M, n, b, a));
                } else {
                    // Im part of rho_ba: +i at (b, a), -i at (a, b).
                    col = cplx(0.0, 1.0) * (L.matrix.col(state_index(M, n, b, a)) - L.matrix.col(state_index(M, n, a, b)));
                }
                for (int r = 0; r <= 1; ++r)
                    for (std::size_t j = 0; j < M; ++j)
                        for (std::size_t m = 0; m < M; ++m) {
                            const auto p = state_index(M, r, j, m);
                            R(p, q) = (j <= m) ? col(p).real() : col(state_index(M, r, m, j)).imag();
                        }
            }
    return R;
}

// Trace functional in real coordinates.
inline Eigen::RowVectorXd real_trace_row(std::size_t levels) {
    Eigen::RowVectorXd t = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(2 * levels * levels));
    for (int n = 0; n <= 1; ++n)
        for (std::size_t j = 0; j < levels; ++j) t(state_index(levels, n, j, j)) = 1.0;
    return t;
}

struct SecularReport {
    std::array<double, 2> ratio{};            // Gamma / (2 max(|mu_tilde|, omega))
    std::array<double, 2> ratio_no_factor2{}; // Gamma / max(|mu_tilde|, omega)
    double threshold{0.1};
    bool pass{false};
    bool pass_no_factor2{false};
};

inline SecularReport secular_validity(const SystemParams& sys, const LeadPair& leads, double threshold = 0.1) {
    const double scale = std::max(std::abs(sys.mu_tilde), sys.omega);
    if (!(scale > 0.0)) throw InvalidParameter("secular_validity: mu_tilde and omega both vanish");
    SecularReport r;
    r.threshold = threshold;
    r.pass = true;
    r.pass_no_factor2 = true;
    for (std::size_t i = 0; i < 2; ++i) {
        r.ratio[i] = leads[i].gamma_rate / (2.0 * scale);
        r.ratio_no_factor2[i] = leads[i].gamma_rate / scale;
        r.pass = r.pass && r.ratio[i] < threshold;
        r.pass_no_factor2 = r.pass_no_factor2 && r.ratio_no_factor2[i] < threshold;
    }
    return r;
}

// Stationary occupation of the bare two-level dot with lead-summed rates at energy mu.
inline double qd_rate_equation(const LeadPair& leads, double mu) {
    double in = 0.0, out = 0.0;
    for (const auto& lead : leads) {
        in += rate_in(lead, mu);
        out += rate_out(lead, mu);
    }
    if (!(in + out > 0.0)) throw DegenerateRates("qd_rate_equation: total rate vanishes");
    return in / (in + out);
}

} // namespace nems
