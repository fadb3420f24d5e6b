#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "nems/leads.hpp"
#include "nems/units.hpp"

namespace {

nems::LeadParams fig3_left() { return {0.2 * M_PI, 2.0, 2.5, 2.5, 2.0, false}; }

TEST(Leads, SpectralDensityPeaksAtCentre) {
    const auto lead = fig3_left();
    EXPECT_DOUBLE_EQ(nems::spectral_density(lead, 2.5), lead.gamma_rate);
    EXPECT_NEAR(nems::spectral_density(lead, 4.5), 0.5 * lead.gamma_rate, 1e-15);
    auto wide = lead;
    wide.wide_band = true;
    EXPECT_DOUBLE_EQ(nems::spectral_density(wide, 1e6), lead.gamma_rate);
}

TEST(Leads, FermiFunctionBasics) {
    const auto lead = fig3_left();
    EXPECT_DOUBLE_EQ(nems::fermi(lead, lead.chem_potential), 0.5);
    for (double e : {-50.0, -3.0, 0.0, 1.0, 7.5, 200.0}) {
        EXPECT_NEAR(nems::fermi(lead, e) + nems::fermi_complement(lead, e), 1.0, 1e-15);
        EXPECT_TRUE(std::isfinite(nems::fermi(lead, e)));
    }
    EXPECT_EQ(nems::fermi(lead, 1e4), 0.0);
    EXPECT_EQ(nems::fermi(lead, -1e4), 1.0);
}

TEST(Leads, RatesSumToSpectralDensityAndObeyDetailedBalance) {
    const auto lead = fig3_left();
    for (double e : {-6.0, -1.0, 0.3, 2.5, 5.0}) {
        const double in = nems::rate_in(lead, e), out = nems::rate_out(lead, e);
        EXPECT_NEAR(in + out, nems::spectral_density(lead, e), 1e-15);
        EXPECT_NEAR(in / out, std::exp(-(e - lead.chem_potential) / lead.temperature), 1e-12);
    }
}

TEST(Leads, ValidationRejectsNonPhysicalInput) {
    auto lead = fig3_left();
    lead.temperature = 0.0;
    EXPECT_THROW(lead.validate(), nems::InvalidParameter);
    lead = fig3_left();
    lead.lorentz_width = -1.0;
    EXPECT_THROW(lead.validate(), nems::InvalidParameter);
    lead = fig3_left();
    lead.gamma_rate = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(lead.validate(), nems::InvalidParameter);
    lead = fig3_left();
    lead.wide_band = true;
    lead.lorentz_width = -1.0;
    EXPECT_NO_THROW(lead.validate());
}

TEST(Leads, WarningsFlagStrongTunneling) {
    auto lead = fig3_left();
    lead.gamma_rate = 1.0;
    EXPECT_FALSE(lead.warnings().empty());
    lead.gamma_rate = 0.01;
    EXPECT_TRUE(lead.warnings().empty());
}

TEST(Units, TemperaturesFromMillikelvin) {
    EXPECT_NEAR(nems::units::temperature_from_millikelvin(50.0), 6.546, 1e-3);
    EXPECT_NEAR(nems::units::temperature_from_millikelvin(40.0), 5.237, 1e-3);
    EXPECT_NEAR(nems::units::temperature_from_millikelvin(15.28), 2.0, 1e-3);
    EXPECT_NEAR(nems::units::temperature_from_millikelvin(34.4), 4.5, 1e-2);
    EXPECT_NEAR(nems::units::millikelvin_from_temperature(nems::units::temperature_from_millikelvin(12.0)), 12.0, 1e-12);
    EXPECT_THROW(nems::units::temperature_from_millikelvin(-1.0), nems::InvalidParameter);
}

TEST(Units, CyclicGigahertz) {
    EXPECT_DOUBLE_EQ(nems::units::from_cyclic_ghz(1.0), 2.0 * M_PI);
    EXPECT_DOUBLE_EQ(nems::units::from_cyclic_ghz(0.1), 0.2 * M_PI);
}

} // namespace
