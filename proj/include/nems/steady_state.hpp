// steady_state.hpp - stationary states and transient integration of the block generator

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "nems/errors.hpp"
#include "nems/master_equation.hpp"

namespace nems {

struct SteadyStateOptions {
    // Reciprocal condition estimate of the bordered system below which the SVD path is used.
    double rcond_threshold{1e-10};
    // A singular value counts as zero below this fraction of the largest.
    double null_tolerance{1e-6};
    // Residual bound ||L v|| <= tol * ||L||_F * ||v||.
    double residual_tolerance{1e-10};
    // Run the SVD uniqueness check even when the bordered LU is well conditioned.
    bool always_check_uniqueness{false};
    // Used to select a stationary state when the nullspace is degenerate.
    std::optional<BlockDensityMatrix> reference;
};

struct SteadyStateResult {
    BlockDensityMatrix state;
    double residual{0.0};      // ||L v|| / (||L||_F ||v||)
    double min_eigenvalue{0.0};
    std::size_t nullity{1};
    bool used_svd{false};
    bool projected{false};     // degenerate nullspace resolved by projecting the reference state
};

namespace detail {

inline SteadyStateResult finish_steady_state(const Liouvillian& L, const Eigen::VectorXd& x, const SteadyStateOptions& opts) {
    SteadyStateResult out;
    out.state = from_real_coordinates(x, L.levels, Frame::polaron);
    const cplx tr = out.state.total_trace();
    out.state.block0 /= tr.real();
    out.state.block1 /= tr.real();
    out.state.hermitize();
    const Eigen::VectorXcd v = vectorize(out.state);
    const double lnorm = L.matrix.norm();
    out.residual = (L.matrix * v).norm() / (lnorm * v.norm());
    if (!(out.residual <= opts.residual_tolerance))
        throw ConvergenceError("steady_state: residual " + std::to_string(out.residual) + " above tolerance");
    out.min_eigenvalue = out.state.min_eigenvalue();
    return out;
}

struct StationaryVector {
    Eigen::VectorXd x;
    std::size_t nullity{1};
    bool used_svd{false};
    bool projected{false};
};

// Solves R x = 0 with trace_row . x = 1. A degenerate kernel is resolved by the
// spectral projection V (W^T V)^{-1} W^T xref of a reference vector.
inline StationaryVector stationary_vector(const Eigen::MatrixXd& R, const Eigen::RowVectorXd& trace_row,
                                          const SteadyStateOptions& opts, const Eigen::VectorXd* xref) {
    const Eigen::Index dim = R.rows();
    StationaryVector out;
    if (!opts.always_check_uniqueness) {
        Eigen::MatrixXd A = R;
        A.row(0) = trace_row;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
        rhs(0) = 1.0;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        // The condition estimate misses exactly vanishing pivots, so those are screened separately.
        const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
        const bool pivots_ok = pivots.minCoeff() > opts.rcond_threshold * pivots.maxCoeff();
        if (pivots_ok && lu.rcond() >= opts.rcond_threshold) {
            out.x = lu.solve(rhs);
            if (out.x.allFinite()) return out;
        }
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s(0);
    Eigen::Index nullity = 0;
    for (Eigen::Index i = 0; i < dim; ++i)
        if (s(i) <= opts.null_tolerance * smax) ++nullity;
    if (nullity == 0) throw ConvergenceError("steady_state: generator has no numerical nullspace");

    const Eigen::MatrixXd V = svd.matrixV().rightCols(nullity);
    Eigen::VectorXd x;
    if (nullity == 1) {
        x = V.col(0);
    } else {
        if (xref == nullptr)
            throw NonUniqueSteadyState("steady_state: nullspace dimension " + std::to_string(nullity) +
                                       "; supply a reference state");
        const Eigen::MatrixXd W = svd.matrixU().rightCols(nullity);
        const Eigen::MatrixXd wv = W.transpose() * V;
        x = V * wv.fullPivLu().solve(W.transpose() * (*xref));
        out.projected = true;
    }
    const double tr = trace_row.dot(x);
    if (std::abs(tr) < 1e-300) throw NonUniqueSteadyState("steady_state: stationary vector has zero trace");
    out.x = x / tr;
    out.nullity = static_cast<std::size_t>(nullity);
    out.used_svd = true;
    return out;
}

} // namespace detail

inline SteadyStateResult steady_state(const Liouvillian& L, const SteadyStateOptions& opts = {}) {
    const Eigen::MatrixXd R = real_generator(L);
    Eigen::VectorXd xref;
    if (opts.reference) {
        if (static_cast<std::size_t>(opts.reference->levels()) != L.levels)
            throw DimensionError("steady_state: reference state size mismatch");
        xref = to_real_coordinates(*opts.reference);
    }
    const auto sv = detail::stationary_vector(R, real_trace_row(L.levels), opts, opts.reference ? &xref : nullptr);
    auto out = detail::finish_steady_state(L, sv.x, opts);
    out.nullity = sv.nullity;
    out.used_svd = sv.used_svd;
    out.projected = sv.projected;
    return out;
}

struct EvolveOptions {
    double abs_tolerance{1e-10};
    double rel_tolerance{1e-8};
};

struct Trajectory {
    std::vector<double> times;
    std::vector<BlockDensityMatrix> states;
};

// Adaptive Dormand-Prince integration of d rho / dt = L rho, sampled on t_grid.
inline Trajectory evolve(const Liouvillian& L, const BlockDensityMatrix& rho0, const std::vector<double>& t_grid,
                         const EvolveOptions& opts = {}) {
    namespace ode = boost::numeric::odeint;
    if (static_cast<std::size_t>(rho0.levels()) != L.levels) throw DimensionError("evolve: size mismatch");
    if (rho0.frame != Frame::polaron) throw FrameMismatch("evolve: initial state must be in the polaron frame");
    if (t_grid.empty()) throw InvalidParameter("evolve: empty time grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw InvalidParameter("evolve: time grid must be increasing");

    const Eigen::MatrixXd R = real_generator(L);
    const Eigen::VectorXd x0 = to_real_coordinates(rho0);
    std::vector<double> state(x0.data(), x0.data() + x0.size());
    const auto n = static_cast<Eigen::Index>(state.size());

    auto rhs = [&R, n](const std::vector<double>& x, std::vector<double>& dxdt, double) {
        Eigen::Map<Eigen::VectorXd>(dxdt.data(), n).noalias() = R * Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    };

    Trajectory traj;
    traj.times = t_grid;
    traj.states.reserve(t_grid.size());
    auto observer = [&traj, &L](const std::vector<double>& x, double) {
        const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
        traj.states.push_back(from_real_coordinates(v, L.levels, Frame::polaron));
    };

    using stepper_type = ode::runge_kutta_dopri5<std::vector<double>>;
    const double span = t_grid.back() - t_grid.front();
    const double dt0 = (t_grid.size() > 1) ? std::max(span * 1e-6, 1e-12) : 1e-3;
    try {
        ode::integrate_times(ode::make_dense_output(opts.abs_tolerance, opts.rel_tolerance, stepper_type()), rhs,
                             state, t_grid.begin(), t_grid.end(), dt0, observer);
    } catch (const std::exception& e) {
        throw StepSizeUnderflow(std::string("evolve: integrator failed: ") + e.what());
    }
    return traj;
}

} // namespace nems
