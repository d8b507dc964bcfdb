#pragma once

#include <cmath>

#include "doppler/core/params.hpp"

namespace doppler::acquire {

// Separable two-way point spread function in beam coordinates: Gaussian in
// range, Gaussian in angle off the beam axis. Contributions beyond
// cutoff_sigmas are dropped; at the default 6 the truncated tail is below
// exp(-18) ~ 1.5e-8 of the peak.
struct PsfModel {
  double axial_sigma_m = 7.2665e-4;
  double lateral_sigma_rad = 0.0125;
  double cutoff_sigmas = 6.0;

  // Angular width is constant over depth for a fixed aperture; the range
  // argument is kept so a depth-dependent model slots in unchanged.
  double lateral_sigma_at(double /*range_m*/) const { return lateral_sigma_rad; }
};

inline void validate(const PsfModel& psf) {
  require_data(psf.axial_sigma_m > 0, "psf: axial_sigma_m must be > 0");
  require_data(psf.lateral_sigma_rad > 0, "psf: lateral_sigma_rad must be > 0");
  require_data(psf.cutoff_sigmas >= 3, "psf: cutoff_sigmas must be >= 3");
}

// Axial sigma from the Doppler pulse length (two-way envelope FWHM
// cycles/f_c * c/2), lateral sigma from the diffraction-limited beam width
// 0.42 lambda / aperture.
inline PsfModel default_psf(const AcquisitionParams& p) {
  PsfModel psf;
  const double pulse_extent_m = p.doppler_cycles / p.center_frequency_hz * p.sound_speed_mps / 2.0;
  psf.axial_sigma_m = pulse_extent_m / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  psf.lateral_sigma_rad = 0.42 * p.wavelength_m() / p.aperture_m();
  return psf;
}

// Line-by-line focused firing: beam j fires its whole packet before beam
// j+1, so shot (j, k) happens at slow-time index j*n + k.
struct FiringSchedule {
  double prf_hz;
  int packet_size;

  double shot_time_s(int beam, int k) const {
    return (static_cast<double>(beam) * packet_size + k) / prf_hz;
  }
  int shot_count(int beams) const { return beams * packet_size; }
};

}  // namespace doppler::acquire
