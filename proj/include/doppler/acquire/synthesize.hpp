#pragma once

#include <cstdint>
#include <optional>

#include "doppler/acquire/psf.hpp"
#include "doppler/core/sample.hpp"
#include "doppler/phantom/phantom.hpp"

namespace doppler::acquire {

// Renders the slow-time ensemble seen by a line-by-line firing sequence.
//
// Per line, scatterer envelope weights (axial and lateral Gaussians) are
// anchored at the line's first shot; across the packet only the two-way
// carrier phase exp(-i 4 pi f_c r / c) tracks the exact per-shot scatterer
// ranges. This is the narrowband packet model: motion within one packet
// shifts phase but not the resolution cell, so constant radial motion
// produces an exact slow-time tone. Scatterers advance by explicit Euler
// steps of 1/PRF between shots; one that respawns mid-line stops
// contributing to that line's remaining shots.
//
// If noise_snr_db is set, circular Gaussian noise is added over the whole
// grid, scaled against the mean signal power inside the phantom support.
// Throws DataError for an empty phantom or a zero-signal support.
IQEnsemble synthesize_ensemble(const phantom::PhantomState& state, const ScanGeometry& geometry,
                               const AcquisitionParams& params, const PsfModel& psf,
                               std::optional<double> noise_snr_db, std::uint64_t seed);

// Adds circular complex Gaussian noise so that mean |noise|^2 equals
// 10^(-snr_db/10) times the mean |s|^2 over the given region. Noise covers
// every pixel; the region only sets the reference power.
void add_noise(IQEnsemble& iq, double snr_db, const RoiMask& reference_region, std::uint64_t seed);

}  // namespace doppler::acquire
