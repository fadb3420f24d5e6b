// fock.hpp - truncated bosonic Fock space: ladder operators and displacement matrix elements

#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include <Eigen/Dense>

#include "nems/errors.hpp"

namespace nems {

// States |0> ... |N> with n_levels = N + 1. build_pad extra levels are used
// while constructing operators and dropped before returning.
struct FockSpace {
    std::size_t n_levels{2};
    std::size_t build_pad{0};

    FockSpace() = default;
    FockSpace(std::size_t levels, std::size_t pad) : n_levels(levels), build_pad(pad) { validate(); }

    // Default pad equals the truncation index N.
    static FockSpace with_default_pad(std::size_t levels) { return FockSpace(levels, levels - 1); }

    std::size_t max_index() const { return n_levels - 1; }
    std::size_t padded_levels() const { return n_levels + build_pad; }

    void validate() const {
        if (n_levels < 2) throw InvalidParameter("FockSpace: n_levels must be at least 2");
    }
};

struct LadderMatrices {
    Eigen::MatrixXd annihilation;
    Eigen::MatrixXd creation;
};

// <k|b|l> = sqrt(l) delta_{k,l-1}; creation is the transpose.
inline LadderMatrices ladder_matrices(const FockSpace& space) {
    space.validate();
    const auto n = static_cast<Eigen::Index>(space.n_levels);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index l = 1; l < n; ++l) b(l - 1, l) = std::sqrt(static_cast<double>(l));
    Eigen::MatrixXd bdag = b.transpose();
    return {std::move(b), std::move(bdag)};
}

struct DisplacementMatrix {
    double lambda{0.0};
    // <k|exp(lambda (b^dag - b))|l> for k, l <= N.
    Eigen::MatrixXd elements;
    // Same closed form on the padded space; elements is its top-left block.
    Eigen::MatrixXd padded;

    Eigen::Index size() const { return elements.rows(); }
    double operator()(Eigen::Index k, Eigen::Index l) const { return elements(k, l); }
    // <k|D^dag|l> = D_{lk} for real lambda.
    double dagger(Eigen::Index k, Eigen::Index l) const { return elements(l, k); }
};

namespace detail {

// Generalized Laguerre L_n^{(alpha)}(x) by the three-term recurrence in n.
inline double assoc_laguerre(std::size_t n, double alpha, double x) {
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = 1.0 + alpha - x;
    for (std::size_t k = 1; k < n; ++k) {
        const double kk = static_cast<double>(k);
        const double next = ((2.0 * kk + 1.0 + alpha - x) * cur - (kk + alpha) * prev) / (kk + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

// <k|D(lambda)|l> from the associated-Laguerre closed form, lambda != 0.
inline double displacement_element(std::size_t k, std::size_t l, double lambda) {
    const std::size_t lo = std::min(k, l);
    const std::size_t d = (k > l) ? k - l : l - k;
    const double x = lambda * lambda;
    // (lambda)^d for k >= l, (-lambda)^d for k < l.
    const double base = (k >= l) ? lambda : -lambda;
    const double log_mag = 0.5 * (std::lgamma(static_cast<double>(lo) + 1.0) -
                                  std::lgamma(static_cast<double>(lo + d) + 1.0)) +
                           static_cast<double>(d) * std::log(std::abs(lambda)) - 0.5 * x;
    const double sign = (base < 0.0 && (d % 2 == 1)) ? -1.0 : 1.0;
    return sign * std::exp(log_mag) * assoc_laguerre(lo, static_cast<double>(d), x);
}

} // namespace detail

inline DisplacementMatrix displacement_elements(const FockSpace& space, double lambda) {
    space.validate();
    if (!std::isfinite(lambda)) throw InvalidParameter("displacement_elements: lambda must be finite");

    const auto n_pad = static_cast<Eigen::Index>(space.padded_levels());
    const auto n = static_cast<Eigen::Index>(space.n_levels);
    DisplacementMatrix out;
    out.lambda = lambda;
    if (lambda == 0.0) {
        out.padded = Eigen::MatrixXd::Identity(n_pad, n_pad);
    } else {
        out.padded.resize(n_pad, n_pad);
        for (Eigen::Index k = 0; k < n_pad; ++k) {
            for (Eigen::Index l = 0; l < n_pad; ++l) {
                out.padded(k, l) = detail::displacement_element(static_cast<std::size_t>(k),
                                                                static_cast<std::size_t>(l), lambda);
            }
        }
    }
    out.elements = out.padded.topLeftCorner(n, n);
    return out;
}

// Exactly unitary displacement restricted to the truncated space:
// exp(lambda (b^dag - b)) with b truncated to n_levels. Used for frame changes,
// where unitarity matters more than agreement with the infinite-space elements
// at the truncation edge.
inline Eigen::MatrixXd truncated_unitary_displacement(std::size_t n_levels, double lambda) {
    const auto ladder = ladder_matrices(FockSpace(n_levels, 0));
    // lambda (b^dag - b) is real antisymmetric, so i * generator is Hermitian.
    const Eigen::MatrixXcd herm = std::complex<double>(0.0, 1.0) * lambda *
                                  (ladder.creation - ladder.annihilation).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm);
    const Eigen::VectorXcd phases =
        (-std::complex<double>(0.0, 1.0) * eig.eigenvalues().cast<std::complex<double>>()).array().exp();
    const Eigen::MatrixXcd u = eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
    return u.real();
}

} // namespace nems
