#include "difflight/devices.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "difflight/error.hpp"
#include "difflight/units.hpp"

namespace difflight {

namespace {

using units::Dimension;

void check_spec(const DeviceSpec& d, const char* name) {
  if (!(d.latency_s > 0.0) || !std::isfinite(d.latency_s)) {
    throw DomainError(std::string(name) + ": latency must be positive");
  }
  if (!(d.power_w >= 0.0) || !std::isfinite(d.power_w)) {
    throw DomainError(std::string(name) + ": power must be non-negative");
  }
}

void read_spec(const ConfigFile& cfg, const std::string& prefix, DeviceSpec& d) {
  if (auto v = cfg.get(prefix + ".latency")) d.latency_s = units::parse_as(*v, Dimension::Time, prefix + ".latency");
  if (auto v = cfg.get(prefix + ".power")) d.power_w = units::parse_as(*v, Dimension::Power, prefix + ".power");
}

void read_number(const ConfigFile& cfg, const std::string& key, Dimension dim, double scale, double& out) {
  if (auto v = cfg.get(key)) out = units::parse_as(*v, dim, key) * scale;
}

}  // namespace

void DeviceProfile::validate() const {
  check_spec(eo_tune, "eo_tune");
  check_spec(to_tune, "to_tune");
  check_spec(vcsel, "vcsel");
  check_spec(photodetector, "photodetector");
  check_spec(soa, "soa");
  check_spec(dac8, "dac8");
  check_spec(adc8, "adc8");
  check_spec(comparator, "comparator");
  check_spec(subtractor, "subtractor");
  check_spec(lut, "lut");
  if (!(fsr_nm > 0.0)) throw DomainError("tuning.fsr must be positive");
  if (!(ted_scale > 0.0)) throw DomainError("tuning.ted_scale must be positive");
  if (!(eo_range_nm >= 0.0)) throw DomainError("tuning.eo_range must be non-negative");
  if (!(mean_shift_nm >= 0.0)) throw DomainError("tuning.mean_shift must be non-negative");
  if (!(thermal_event_rate >= 0.0 && thermal_event_rate <= 1.0)) {
    throw DomainError("tuning.thermal_event_rate must lie in [0, 1]");
  }
}

void LossBudget::validate() const {
  if (!(waveguide_db_per_cm >= 0.0) || !(splitter_db >= 0.0) || !(mr_through_db >= 0.0) ||
      !(mr_modulation_db >= 0.0)) {
    throw DomainError("loss constants must be non-negative");
  }
  if (!(path_length_cm >= 0.0)) throw DomainError("link.path_length must be non-negative");
  if (!std::isfinite(pd_sensitivity_dbm)) throw DomainError("pd.sensitivity must be finite");
}

DeviceProfile load_device_profile(const ConfigFile& cfg) {
  DeviceProfile p;
  read_spec(cfg, "eo_tune", p.eo_tune);
  read_spec(cfg, "to_tune", p.to_tune);
  read_spec(cfg, "vcsel", p.vcsel);
  read_spec(cfg, "photodetector", p.photodetector);
  read_spec(cfg, "soa", p.soa);
  read_spec(cfg, "dac8", p.dac8);
  read_spec(cfg, "adc8", p.adc8);
  read_spec(cfg, "comparator", p.comparator);
  read_spec(cfg, "subtractor", p.subtractor);
  read_spec(cfg, "lut", p.lut);
  read_number(cfg, "tuning.fsr", Dimension::Length, 1e9, p.fsr_nm);
  read_number(cfg, "tuning.ted_scale", Dimension::Dimensionless, 1.0, p.ted_scale);
  read_number(cfg, "tuning.eo_range", Dimension::Length, 1e9, p.eo_range_nm);
  read_number(cfg, "tuning.mean_shift", Dimension::Length, 1e9, p.mean_shift_nm);
  read_number(cfg, "tuning.thermal_event_rate", Dimension::Dimensionless, 1.0, p.thermal_event_rate);
  p.validate();
  return p;
}

LossBudget load_loss_budget(const ConfigFile& cfg) {
  LossBudget b;
  // Per-cm and per-element losses are written as plain dB figures.
  read_number(cfg, "loss.waveguide", Dimension::Decibel, 1.0, b.waveguide_db_per_cm);
  read_number(cfg, "loss.splitter", Dimension::Decibel, 1.0, b.splitter_db);
  read_number(cfg, "loss.mr_through", Dimension::Decibel, 1.0, b.mr_through_db);
  read_number(cfg, "loss.mr_modulation", Dimension::Decibel, 1.0, b.mr_modulation_db);
  read_number(cfg, "pd.sensitivity", Dimension::DecibelMilliwatt, 1.0, b.pd_sensitivity_dbm);
  read_number(cfg, "link.path_length", Dimension::Length, 1e2, b.path_length_cm);
  b.validate();
  return b;
}

double mr_resonant_wavelength(double radius_um, int order, double n_eff) {
  if (!(radius_um > 0.0) || !std::isfinite(radius_um)) throw DomainError("MR radius must be positive");
  if (order < 1) throw DomainError("MR resonance order must be >= 1");
  if (!(n_eff > 0.0) || !std::isfinite(n_eff)) throw DomainError("effective index must be positive");
  return 2.0 * std::numbers::pi * (radius_um * 1e3) * n_eff / static_cast<double>(order);
}

MrDevice::MrDevice(double radius_um, int order, double n_eff)
    : radius_um_(radius_um),
      order_(order),
      n_eff_(n_eff),
      wavelength_nm_(mr_resonant_wavelength(radius_um, order, n_eff)) {}

void MrDevice::tune(double delta_nm) {
  double target = wavelength_nm_ + delta_nm;
  if (!(target > 0.0)) throw DomainError("tuning would drive the resonance to a non-positive wavelength");
  n_eff_ = target * static_cast<double>(order_) / (2.0 * std::numbers::pi * radius_um_ * 1e3);
  wavelength_nm_ = mr_resonant_wavelength(radius_um_, order_, n_eff_);
  shift_nm_ += delta_nm;
}

TuningChoice select_tuning(double required_shift_nm, double eo_range_nm, bool chip_temp_event,
                           const DeviceProfile& profile) {
  if (!(required_shift_nm >= 0.0) || !std::isfinite(required_shift_nm)) {
    throw DomainError("required tuning shift must be non-negative");
  }
  TuningChoice c;
  if (required_shift_nm <= eo_range_nm && !chip_temp_event) {
    c.mechanism = TuningMechanism::ElectroOptic;
    c.latency_s = profile.eo_tune.latency_s;
    c.energy_j = profile.eo_tune.power_w * required_shift_nm * profile.eo_tune.latency_s;
  } else {
    c.mechanism = TuningMechanism::ThermoOptic;
    c.latency_s = profile.to_tune.latency_s;
    c.energy_j = profile.to_tune.power_w * (required_shift_nm / profile.fsr_nm) * profile.ted_scale *
                 profile.to_tune.latency_s;
  }
  return c;
}

double link_loss(const LinkPath& path, const LossBudget& budget) {
  if (path.waveguide_cm < 0.0 || path.splitters < 0 || path.through_mrs < 0 || path.modulating_mrs < 0) {
    throw DomainError("link path element counts must be non-negative");
  }
  return path.waveguide_cm * budget.waveguide_db_per_cm + path.splitters * budget.splitter_db +
         path.through_mrs * budget.mr_through_db + path.modulating_mrs * budget.mr_modulation_db;
}

LinkVerdict check_link_feasible(double laser_power_dbm, double loss_db, double pd_sensitivity_dbm) {
  LinkVerdict v;
  v.received_dbm = laser_power_dbm - loss_db;
  v.feasible = v.received_dbm >= pd_sensitivity_dbm;
  v.shortfall_db = v.feasible ? 0.0 : pd_sensitivity_dbm - v.received_dbm;
  return v;
}

}  // namespace difflight
