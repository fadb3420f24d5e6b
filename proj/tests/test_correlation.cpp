#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include <boost/math/special_functions/expint.hpp>

#include "nems/correlation.hpp"
#include "nems/grid.hpp"
#include "support/oracles.hpp"

namespace {

nems::LeadParams fig3_left() { return {0.2 * M_PI, 2.0, 2.5, 2.5, 2.0, false}; }
nems::LeadParams fig3_right() { return {0.2 * M_PI, 2.0, -2.5, -2.5, 2.0, false}; }

TEST(Correlation, ScaledExponentialIntegralOnRealAxis) {
    for (double x : {0.05, 0.5, 0.99, 1.01, 3.0, 25.0}) {
        const double ref = std::exp(x) * boost::math::expint(1, x);
        EXPECT_NEAR(nems::detail::scaled_expint_e1({x, 0.0}).real(), ref, 1e-13 * ref) << x;
        EXPECT_NEAR(nems::detail::scaled_expint_e1({x, 0.0}).imag(), 0.0, 1e-14);
    }
}

TEST(Correlation, ScaledExponentialIntegralOffAxis) {
    // exp(z) E1(z) = Int_0^inf exp(-z u) / (1 + u) du for Re z > 0.
    for (auto z : {std::complex<double>(0.5, 0.5), std::complex<double>(2.0, 3.0), std::complex<double>(0.3, 6.0),
                   std::complex<double>(4.0, -2.0)}) {
        boost::math::quadrature::ooura_fourier_cos<double> ci(1e-14, 8);
        boost::math::quadrature::ooura_fourier_sin<double> si(1e-14, 8);
        auto f = [&](double u) { return std::exp(-z.real() * u) / (1.0 + u); };
        const double b = z.imag();
        const std::complex<double> ref(ci.integrate(f, std::abs(b)).first,
                                       -(b > 0 ? 1.0 : -1.0) * si.integrate(f, std::abs(b)).first);
        const auto got = nems::detail::scaled_expint_e1(z);
        EXPECT_LT(std::abs(got - ref), 1e-11 * std::abs(ref)) << z;
    }
}

TEST(Correlation, LorentzTailMatchesQuadrature) {
    const double g = 0.7, d = 2.0, w = 40.0;
    auto f = [&](double t) { return g * d * d / ((w + t) * (w + t) + d * d); };
    for (double s : {0.3, 1.7, 5.0}) {
        boost::math::quadrature::ooura_fourier_cos<double> ci(1e-14, 8);
        boost::math::quadrature::ooura_fourier_sin<double> si(1e-14, 8);
        const std::complex<double> inner(ci.integrate(f, s).first, -si.integrate(f, s).first);
        const std::complex<double> ref = std::polar(1.0, -s * w) * inner;
        EXPECT_LT(std::abs(nems::detail::lorentz_tail(g, d, w, s) - ref), 1e-12) << s;
    }
    EXPECT_NEAR(nems::detail::lorentz_tail(g, d, w, 0.0).real(), g * d * (M_PI / 2 - std::atan(w / d)), 1e-15);
}

TEST(Correlation, MatchesFourierQuadratureOracle) {
    const auto times = nems::uniform_grid(0.0, 3.0, 13);
    for (const auto& lead : {fig3_left(), fig3_right()}) {
        for (int q = 0; q <= 1; ++q) {
            const auto trace = nems::bath_correlation(lead, q, times);
            const double scale = std::abs(trace.values.front());
            for (std::size_t i = 0; i < times.size(); ++i) {
                const auto ref = nems::oracle::correlation_quadrature(lead, q, times[i]);
                EXPECT_LT(std::abs(trace.values[i] - ref), 1e-7 * scale) << "q=" << q << " s=" << times[i];
            }
        }
    }
}

TEST(Correlation, ZeroTimeValuesSumToTotalWeight) {
    // C00(0) + C11(0) = (1/2pi) Int Upsilon = Gamma delta / 2.
    const auto lead = fig3_left();
    const auto c0 = nems::bath_correlation(lead, 0, {0.0}).values.front();
    const auto c1 = nems::bath_correlation(lead, 1, {0.0}).values.front();
    EXPECT_NEAR((c0 + c1).real(), 0.5 * lead.gamma_rate * lead.lorentz_width, 1e-10);
    EXPECT_NEAR(c0.imag(), 0.0, 1e-12);
}

TEST(Correlation, NegativeTimesAreComplexConjugates) {
    const auto lead = fig3_left();
    const auto tr = nems::bath_correlation(lead, 0, {-1.0, -0.5, 0.0, 0.5, 1.0});
    EXPECT_LT(std::abs(tr.values[0] - std::conj(tr.values[4])), 1e-12);
    EXPECT_LT(std::abs(tr.values[1] - std::conj(tr.values[3])), 1e-12);
}

TEST(Correlation, DecaysWithinWindowForAppendixParameters) {
    const auto times = nems::uniform_grid(0.0, 10.0, 401);
    for (const auto& lead : {fig3_left(), fig3_right()}) {
        for (int q = 0; q <= 1; ++q) {
            const auto tr = nems::bath_correlation(lead, q, times);
            ASSERT_TRUE(tr.decayed());
            EXPECT_LT(*tr.decay_time, 10.0);
            const double c0 = std::abs(tr.values.front());
            for (std::size_t i = 0; i < times.size(); ++i)
                if (times[i] >= *tr.decay_time) {
                    EXPECT_LT(std::abs(tr.values[i]), 1e-3 * c0);
                }
        }
    }
}

TEST(Correlation, ShortWindowDoesNotReportDecay) {
    const auto tr = nems::bath_correlation(fig3_left(), 0, nems::uniform_grid(0.0, 0.5, 11));
    EXPECT_FALSE(tr.decayed());
}

TEST(Correlation, RejectsInvalidInput) {
    auto wide = fig3_left();
    wide.wide_band = true;
    EXPECT_THROW(nems::bath_correlation(wide, 0, {0.0, 1.0}), nems::InvalidParameter);
    EXPECT_THROW(nems::bath_correlation(fig3_left(), 2, {0.0}), nems::InvalidParameter);
    EXPECT_THROW(nems::bath_correlation(fig3_left(), 0, {0.0, 1.0, 3.0}), nems::InvalidParameter);
    EXPECT_THROW(nems::bath_correlation(fig3_left(), 0, {}), nems::InvalidParameter);
}

TEST(Grid, UniformGridIsExactlySymmetric) {
    const auto g = nems::uniform_grid(-40.0, 40.0, 51);
    ASSERT_EQ(g.size(), 51u);
    EXPECT_EQ(g.front(), -40.0);
    EXPECT_EQ(g.back(), 40.0);
    EXPECT_EQ(g[25], 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], -g[g.size() - 1 - i]);
}

} // namespace
