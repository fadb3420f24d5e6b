// oracles.hpp - independent reference computations used by the tests and the acceptance run

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "nems/leads.hpp"
#include "nems/master_equation.hpp"

namespace nems::oracle {

// exp(lambda (b^dag - b)) on a large Fock space by the matrix exponential; top-left n x n block returned.
inline Eigen::MatrixXd displacement_expm(std::size_t n, double lambda, std::size_t big) {
    const auto m = static_cast<Eigen::Index>(big);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index l = 1; l < m; ++l) b(l - 1, l) = std::sqrt(static_cast<double>(l));
    const Eigen::MatrixXd gen = lambda * (b.transpose() - b);
    const Eigen::MatrixXd full = gen.exp();
    return full.topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

// Polaron-frame grand-canonical state exp(-beta (H - mu N)) / Z for H = omega b^dag b + mu_tilde d^dag d.
inline BlockDensityMatrix polaron_gibbs(const SystemParams& sys, double temperature, double mu) {
    const std::size_t M = sys.levels();
    auto rho = BlockDensityMatrix::zero(M);
    double z = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
        const double e = sys.omega * static_cast<double>(k);
        const double w0 = std::exp(-e / temperature);
        const double w1 = std::exp(-(e + sys.mu_tilde - mu) / temperature);
        rho.block0(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = w0;
        rho.block1(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = w1;
        z += w0 + w1;
    }
    rho.block0 /= z;
    rho.block1 /= z;
    return rho;
}

// g_q(x): rate_out for q = 0, rate_in for q = 1.
inline double bath_rate(const LeadParams& lead, int q, double x) {
    return (q == 0) ? rate_out(lead, x) : rate_in(lead, x);
}

// PV Int g_q(x + a) / x dx as Int_0^inf [g(a + x) - g(a - x)] / x dx by adaptive Gauss-Kronrod.
inline double principal_value_quadrature(const LeadParams& lead, int q, double a) {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double x) {
        if (x == 0.0) {
            const double h = 1e-6;
            return (bath_rate(lead, q, a + h) - bath_rate(lead, q, a - h)) / (2.0 * h);
        }
        return (bath_rate(lead, q, a + x) - bath_rate(lead, q, a - x)) / x;
    };
    // Break points at the Lorentzian centre and chemical potential distances keep the panels smooth.
    const double scale = std::abs(a - lead.lorentz_center) + std::abs(a - lead.chem_potential) + lead.lorentz_width +
                         lead.temperature;
    const double edges[] = {0.0, 0.25 * scale, scale, 4.0 * scale, 16.0 * scale, 64.0 * scale};
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < std::size(edges); ++i)
        sum += gauss_kronrod<double, 61>::integrate(f, edges[i], edges[i + 1], 10, 1e-11);
    sum += gauss_kronrod<double, 61>::integrate(f, edges[std::size(edges) - 1], std::numeric_limits<double>::infinity(), 10,
                                                1e-11);
    return sum;
}

// C_q(s) = (1/2pi) Int g_q(w) exp(-+ i w s) dw by Ooura's double-exponential Fourier quadrature.
inline std::complex<double> correlation_quadrature(const LeadParams& lead, int q, double s) {
    using boost::math::quadrature::gauss_kronrod;
    const double sign = (q == 0) ? -1.0 : 1.0;
    if (s == 0.0) {
        auto g = [&](double w) { return bath_rate(lead, q, w); };
        const double c = lead.lorentz_center;
        double total = gauss_kronrod<double, 61>::integrate(g, -std::numeric_limits<double>::infinity(), c, 30, 1e-13) +
                       gauss_kronrod<double, 61>::integrate(g, c, std::numeric_limits<double>::infinity(), 30, 1e-13);
        return total / (2.0 * std::numbers::pi);
    }
    // Int g(w) e^{i sign w s} dw = Int_0^inf [g(w) + g(-w)] cos(ws) + i sign [g(w) - g(-w)] sin(ws) dw
    const double t = std::abs(s);
    const double sgn = sign * (s > 0 ? 1.0 : -1.0);
    auto even = [&](double w) { return bath_rate(lead, q, w) + bath_rate(lead, q, -w); };
    auto odd = [&](double w) { return bath_rate(lead, q, w) - bath_rate(lead, q, -w); };
    boost::math::quadrature::ooura_fourier_cos<double> cos_int(1e-13, 8);
    boost::math::quadrature::ooura_fourier_sin<double> sin_int(1e-13, 8);
    const double re = cos_int.integrate(even, t).first;
    const double im = sgn * sin_int.integrate(odd, t).first;
    return std::complex<double>(re, im) / (2.0 * std::numbers::pi);
}

// Random hermitian, unit-trace block state with full rank.
inline BlockDensityMatrix random_state(std::size_t levels, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    const auto m = static_cast<Eigen::Index>(levels);
    auto block = [&]() {
        Eigen::MatrixXcd g(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) g(i, j) = {n01(rng), n01(rng)};
        return Eigen::MatrixXcd(g * g.adjoint());
    };
    BlockDensityMatrix rho{block(), block(), Frame::polaron};
    const double tr = rho.total_trace().real();
    rho.block0 /= tr;
    rho.block1 /= tr;
    return rho;
}

// Parameters drawn from the regime the master equation targets (Gamma small against T, omega and delta).
struct RandomDraw {
    SystemParams sys;
    LeadPair leads;
};

inline RandomDraw random_valid_parameters(std::mt19937_64& rng, std::size_t n_fock = 6) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    RandomDraw d;
    d.sys.omega = range(3.0, 8.0);
    d.sys.lambda = range(0.1, 1.5);
    d.sys.mu_tilde = range(-10.0, 10.0);
    d.sys.n_fock = n_fock;
    for (auto& lead : d.leads) {
        lead.gamma_rate = range(0.05, 0.3);
        lead.temperature = range(1.5, 5.0);
        lead.chem_potential = range(-8.0, 8.0);
        lead.lorentz_center = range(-10.0, 10.0);
        lead.lorentz_width = range(3.0, 20.0);
    }
    return d;
}

} // namespace nems::oracle
