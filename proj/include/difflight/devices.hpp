#pragma once

#include <string>

#include "difflight/config_file.hpp"

namespace difflight {

// Latency/power contract of one optoelectronic or electronic component.
struct DeviceSpec {
  double latency_s = 0.0;
  double power_w = 0.0;

  double energy_per_op() const { return latency_s * power_w; }
};

// Defaults are the fabricated-device figures the accelerator model is built on.
// EO power is per nm of resonance shift, TO power is per FSR of shift.
struct DeviceProfile {
  DeviceSpec eo_tune{20e-9, 4e-6};
  DeviceSpec to_tune{4e-6, 27.5e-3};
  DeviceSpec vcsel{0.07e-9, 1.3e-3};
  DeviceSpec photodetector{5.8e-12, 2.8e-3};
  DeviceSpec soa{0.3e-9, 2.2e-3};
  DeviceSpec dac8{0.29e-9, 3e-3};
  DeviceSpec adc8{0.82e-9, 3.1e-3};
  DeviceSpec comparator{623.7e-12, 0.055e-3};
  DeviceSpec subtractor{719.95e-12, 0.0028e-3};
  DeviceSpec lut{222.5e-12, 4.21e-3};

  // Hybrid tuning policy parameters.
  double fsr_nm = 20.0;
  double ted_scale = 1.0;           // TO power multiplier from thermal eigenmode decomposition
  double eo_range_nm = 1.0;         // largest shift EO tuning can reach
  double mean_shift_nm = 0.5;       // average resonance shift needed to imprint one value
  double thermal_event_rate = 0.0;  // fraction of passes that must fall back to TO tuning

  void validate() const;
};

// Optical loss constants. waveguide_db_per_cm applies per cm of path.
struct LossBudget {
  double waveguide_db_per_cm = 1.0;
  double splitter_db = 0.13;
  double mr_through_db = 0.02;
  double mr_modulation_db = 0.72;
  double pd_sensitivity_dbm = -20.0;
  double path_length_cm = 0.5;  // on-chip waveguide length of one block's optical path

  void validate() const;
};

// Reads every profile/budget key present in `cfg`; missing keys keep defaults.
DeviceProfile load_device_profile(const ConfigFile& cfg);
LossBudget load_loss_budget(const ConfigFile& cfg);

// lambda = 2*pi*R*n_eff / m, R in micrometres, result in nanometres.
double mr_resonant_wavelength(double radius_um, int order, double n_eff);

class MrDevice {
 public:
  MrDevice(double radius_um, int order, double n_eff);

  double radius_um() const { return radius_um_; }
  int order() const { return order_; }
  double n_eff() const { return n_eff_; }
  double resonant_wavelength_nm() const { return wavelength_nm_; }
  double tuning_shift_nm() const { return shift_nm_; }

  // Shifts the resonance by delta_nm through the effective index.
  void tune(double delta_nm);

 private:
  double radius_um_;
  int order_;
  double n_eff_;
  double wavelength_nm_;
  double shift_nm_ = 0.0;
};

enum class TuningMechanism { ElectroOptic, ThermoOptic };

struct TuningChoice {
  TuningMechanism mechanism = TuningMechanism::ElectroOptic;
  double latency_s = 0.0;
  double energy_j = 0.0;
};

// EO whenever the shift is within EO range and no thermal event is pending.
TuningChoice select_tuning(double required_shift_nm, double eo_range_nm, bool chip_temp_event,
                           const DeviceProfile& profile = {});

struct LinkPath {
  double waveguide_cm = 0.0;
  int splitters = 0;
  int through_mrs = 0;
  int modulating_mrs = 0;
};

// Total insertion loss of a path in dB.
double link_loss(const LinkPath& path, const LossBudget& budget = {});

struct LinkVerdict {
  bool feasible = true;
  double received_dbm = 0.0;
  double shortfall_db = 0.0;  // > 0 only when infeasible
};

LinkVerdict check_link_feasible(double laser_power_dbm, double loss_db, double pd_sensitivity_dbm);

}  // namespace difflight
