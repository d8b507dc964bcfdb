#pragma once

#include "doppler/common.hpp"

namespace doppler {

// Acquisition setup for one slow-time ensemble. Defaults follow a 2.7 MHz
// 64-element phased array firing 6-cycle Doppler pulses.
struct AcquisitionParams {
  double center_frequency_hz = 2.7e6;
  double prf_hz = 6000.0;
  double sound_speed_mps = 1540.0;
  int packet_size = 8;        // slow-time samples per beam
  double doppler_cycles = 6.0;
  int element_count = 64;
  double pitch_m = 300e-6;

  double wavelength_m() const { return sound_speed_mps / center_frequency_hz; }
  double aperture_m() const { return element_count * pitch_m; }
  double pri_s() const { return 1.0 / prf_hz; }
};

inline void validate(const AcquisitionParams& p) {
  require_data(p.center_frequency_hz > 0, "acquisition: center_frequency_hz must be > 0");
  require_data(p.prf_hz > 0, "acquisition: prf_hz must be > 0");
  require_data(p.sound_speed_mps > 0, "acquisition: sound_speed_mps must be > 0");
  require_data(p.packet_size >= 2, "acquisition: packet_size must be >= 2");
  require_data(p.doppler_cycles > 0, "acquisition: doppler_cycles must be > 0");
  require_data(p.element_count > 0, "acquisition: element_count must be > 0");
  require_data(p.pitch_m > 0, "acquisition: pitch_m must be > 0");
}

// Largest unambiguous axial speed: one pulse interval maps +-v_N to a
// +-pi phase step of the two-way carrier.
inline double nyquist_velocity(const AcquisitionParams& p) {
  return p.sound_speed_mps * p.prf_hz / (4.0 * p.center_frequency_hz);
}

}  // namespace doppler
