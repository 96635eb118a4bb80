#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "difflight/devices.hpp"
#include "difflight/error.hpp"
#include "difflight/units.hpp"

using namespace difflight;

TEST(Units, ParsesSuffixesToSiBase) {
  EXPECT_DOUBLE_EQ(units::parse("20ns").value, 20e-9);
  EXPECT_DOUBLE_EQ(units::parse("4 uW").value, 4e-6);
  EXPECT_DOUBLE_EQ(units::parse("4 \xC2\xB5W").value, 4e-6);
  EXPECT_DOUBLE_EQ(units::parse("27.5mW").value, 27.5e-3);
  EXPECT_EQ(units::parse("-20dBm").dimension, units::Dimension::DecibelMilliwatt);
  EXPECT_EQ(units::parse("2.4").dimension, units::Dimension::Dimensionless);
  EXPECT_THROW(units::parse("3 parsecs"), SchemaError);
  EXPECT_THROW(units::parse_as("20ns", units::Dimension::Power, "vcsel.power"), SchemaError);
}

TEST(Units, DbmRoundTrip) {
  EXPECT_NEAR(units::milliwatt_to_dbm(1.0), 0.0, 1e-15);
  EXPECT_NEAR(units::dbm_to_milliwatt(units::milliwatt_to_dbm(1.3)), 1.3, 1e-12);
}

TEST(Units, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1e-13, 123456.789, -2.5e-300}) EXPECT_EQ(std::stod(units::format_double(v)), v);
}

TEST(ConfigFile, ParsesAndTracksUnknownKeys) {
  auto cfg = ConfigFile::parse("# profile\neo_tune.latency = 25ns\n\nvcsel.powr = 1mW\n");
  auto profile = load_device_profile(cfg);
  EXPECT_DOUBLE_EQ(profile.eo_tune.latency_s, 25e-9);
  EXPECT_EQ(cfg.unknown_keys(), std::vector<std::string>{"vcsel.powr"});
  EXPECT_THROW(ConfigFile::parse("a = 1\na = 2\n"), SchemaError);
  EXPECT_THROW(ConfigFile::parse("no equals sign\n"), SchemaError);
}

TEST(DeviceProfile, DefaultsMatchDeviceTable) {
  DeviceProfile p;
  EXPECT_DOUBLE_EQ(p.eo_tune.latency_s, 20e-9);
  EXPECT_DOUBLE_EQ(p.to_tune.latency_s, 4e-6);
  EXPECT_DOUBLE_EQ(p.to_tune.power_w, 27.5e-3);
  EXPECT_DOUBLE_EQ(p.vcsel.latency_s, 0.07e-9);
  EXPECT_DOUBLE_EQ(p.vcsel.power_w, 1.3e-3);
  EXPECT_DOUBLE_EQ(p.photodetector.latency_s, 5.8e-12);
  EXPECT_DOUBLE_EQ(p.soa.latency_s, 0.3e-9);
  EXPECT_DOUBLE_EQ(p.dac8.power_w, 3e-3);
  EXPECT_DOUBLE_EQ(p.adc8.latency_s, 0.82e-9);
  EXPECT_DOUBLE_EQ(p.comparator.latency_s, 623.7e-12);
  EXPECT_DOUBLE_EQ(p.subtractor.latency_s, 719.95e-12);
  EXPECT_DOUBLE_EQ(p.lut.power_w, 4.21e-3);
}

TEST(DeviceProfile, LoaderRejectsBadValues) {
  EXPECT_THROW(load_device_profile(ConfigFile::parse("dac8.latency = -1ns")), DomainError);
  EXPECT_THROW(load_device_profile(ConfigFile::parse("dac8.latency = 3mW")), SchemaError);
  EXPECT_THROW(load_device_profile(ConfigFile::parse("tuning.thermal_event_rate = 2")), DomainError);
  EXPECT_NO_THROW(load_loss_budget(ConfigFile::parse("pd.sensitivity = -25dBm\nlink.path_length = 1cm")));
  EXPECT_DOUBLE_EQ(load_loss_budget(ConfigFile::parse("link.path_length = 1cm")).path_length_cm, 1.0);
}

TEST(MrResonance, ClosedFormExample) {
  EXPECT_NEAR(mr_resonant_wavelength(5.0, 50, 2.4), 2.0 * std::numbers::pi * 5000.0 * 2.4 / 50.0, 1e-9);
  EXPECT_NEAR(mr_resonant_wavelength(5.0, 50, 2.4), 1507.96447, 1e-5);
}

TEST(MrResonance, HomogeneityProperties) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> r(1.0, 20.0), n(1.5, 3.5), s(0.25, 4.0);
  std::uniform_int_distribution<int> m(1, 200);
  for (int i = 0; i < 200; ++i) {
    const double R = r(rng), ne = n(rng), k = s(rng);
    const int order = m(rng);
    const double base = mr_resonant_wavelength(R, order, ne);
    EXPECT_NEAR(mr_resonant_wavelength(R, order, 2.0 * ne), 2.0 * base, 1e-9 * base);
    EXPECT_NEAR(mr_resonant_wavelength(2.0 * R, 2 * order, ne), base, 1e-9 * base);
    EXPECT_NEAR(mr_resonant_wavelength(k * R, order, ne), k * base, 1e-9 * base);
  }
  EXPECT_THROW(mr_resonant_wavelength(0.0, 1, 2.4), DomainError);
  EXPECT_THROW(mr_resonant_wavelength(5.0, 0, 2.4), DomainError);
}

TEST(MrDevice, TuneShiftsResonance) {
  MrDevice mr(5.0, 50, 2.4);
  const double before = mr.resonant_wavelength_nm();
  mr.tune(0.75);
  EXPECT_NEAR(mr.resonant_wavelength_nm(), before + 0.75, 1e-9);
  EXPECT_NEAR(mr.tuning_shift_nm(), 0.75, 1e-15);
  EXPECT_GT(mr.n_eff(), 2.4);
}

TEST(SelectTuning, ZeroShiftIsFreeElectroOptic) {
  auto c = select_tuning(0.0, 1.0, false);
  EXPECT_EQ(c.mechanism, TuningMechanism::ElectroOptic);
  EXPECT_EQ(c.energy_j, 0.0);
}

TEST(SelectTuning, WithinRangeUsesElectroOptic) {
  auto c = select_tuning(0.5, 1.0, false);
  EXPECT_EQ(c.mechanism, TuningMechanism::ElectroOptic);
  EXPECT_DOUBLE_EQ(c.latency_s, 20e-9);
  EXPECT_NEAR(c.energy_j, 4e-6 * 0.5 * 20e-9, 1e-27);
}

TEST(SelectTuning, BeyondRangeOrThermalEventUsesThermoOptic) {
  auto c = select_tuning(2.0, 1.0, false);
  EXPECT_EQ(c.mechanism, TuningMechanism::ThermoOptic);
  EXPECT_DOUBLE_EQ(c.latency_s, 4e-6);
  EXPECT_NEAR(c.energy_j, 27.5e-3 * (2.0 / 20.0) * 4e-6, 1e-20);
  EXPECT_EQ(select_tuning(0.5, 1.0, true).mechanism, TuningMechanism::ThermoOptic);
  DeviceProfile ted;
  ted.ted_scale = 0.5;
  EXPECT_NEAR(select_tuning(2.0, 1.0, false, ted).energy_j, 0.5 * c.energy_j, 1e-20);
}

TEST(SelectTuning, ElectroOpticWheneverItSuffices) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const double shift = u(rng), range = u(rng);
    auto c = select_tuning(shift, range, false);
    EXPECT_EQ(c.mechanism == TuningMechanism::ElectroOptic, shift <= range);
    EXPECT_TRUE(std::isfinite(c.energy_j) && c.energy_j >= 0.0 && c.latency_s > 0.0);
  }
}

TEST(LinkLoss, WorkedSums) {
  EXPECT_EQ(link_loss({0, 0, 0, 0}), 0.0);
  EXPECT_NEAR(link_loss({1.0, 1, 10, 2}), 2.77, 1e-12);
  EXPECT_NEAR(link_loss({2.0, 0, 36, 2}), 4.16, 1e-12);
  EXPECT_THROW(link_loss({-1.0, 0, 0, 0}), DomainError);
}

TEST(LinkLoss, AdditiveOverConcatenation) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> cm(0.0, 3.0);
  std::uniform_int_distribution<int> n(0, 40);
  for (int i = 0; i < 200; ++i) {
    LinkPath a{cm(rng), n(rng), n(rng), n(rng)}, b{cm(rng), n(rng), n(rng), n(rng)};
    LinkPath ab{a.waveguide_cm + b.waveguide_cm, a.splitters + b.splitters, a.through_mrs + b.through_mrs,
                a.modulating_mrs + b.modulating_mrs};
    EXPECT_NEAR(link_loss(ab), link_loss(a) + link_loss(b), 1e-12);
  }
}

TEST(LinkFeasibility, WorkedVerdicts) {
  const double vcsel = units::milliwatt_to_dbm(1.3);
  EXPECT_NEAR(vcsel, 1.13943, 1e-5);
  auto ok = check_link_feasible(vcsel, 2.77, -20.0);
  EXPECT_TRUE(ok.feasible);
  EXPECT_NEAR(ok.received_dbm, -1.63057, 1e-5);
  EXPECT_TRUE(check_link_feasible(-20.0, 0.0, -20.0).feasible);
  auto bad = check_link_feasible(1.14, 30.0, -20.0);
  EXPECT_FALSE(bad.feasible);
  EXPECT_NEAR(bad.shortfall_db, 8.86, 1e-12);
}
