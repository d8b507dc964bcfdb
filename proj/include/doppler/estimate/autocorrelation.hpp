#pragma once

#include "doppler/core/sample.hpp"

namespace doppler::estimate {

// Per-pixel slow-time statistics: r1 is the unnormalized lag-one sum
// sum_{k<n-1} conj(s_k) s_{k+1}, r0 the mean power (1/n) sum |s_k|^2.
struct AutocorrMap {
  ComplexField r1;
  RealField r0;
};

AutocorrMap lag_one_autocorrelation(const IQEnsemble& iq);

// Separable Hamming-window smoothing, 10 taps along depth and 4 along
// beams by default. Near the border the window is renormalized over the
// in-bounds taps, so constant fields pass through unchanged. Tap m of an
// M-tap window reads offset m - (M-1)/2.
AutocorrMap smooth_autocorrelation(const AutocorrMap& ac, int axial_taps = 10,
                                   int lateral_taps = 4);

RealField smooth_field(const RealField& f, int axial_taps = 10, int lateral_taps = 4);

// Velocity from the smoothed lag-one phase: v = -v_N arg(r1) / pi.
// Pixels with r1 == 0 carry no phase and map to zero velocity.
VelocityMap doppler_velocity_map(const IQEnsemble& iq, bool smoothed = true, int axial_taps = 10,
                                 int lateral_taps = 4);

// Pixels whose lag-one sum carries usable phase.
MaskField nonzero_lag_mask(const AutocorrMap& ac);

// Sub-ensemble [first, first + packet): fewer slow-time samples, same
// geometry and PRF.
IQEnsemble reduce_packet(const IQEnsemble& iq, int first, int packet);

}  // namespace doppler::estimate
