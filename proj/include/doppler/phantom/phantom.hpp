#pragma once

#include <cstdint>
#include <vector>

#include "doppler/core/geometry.hpp"
#include "doppler/phantom/flow.hpp"
#include "doppler/phantom/support.hpp"

namespace doppler::phantom {

struct Scatterer {
  Vec2 pos_m;
  double amplitude;  // Rayleigh-distributed echo strength
};

struct PhantomState {
  std::vector<Scatterer> scatterers;
  FlowField flow;
  Support support;
};

// Uniform cloud over the support, Poisson-distributed count at the given
// area density, Rayleigh amplitudes (fully developed speckle).
PhantomState make_cloud(const FlowField& flow, const Support& support, double density_per_mm2,
                        std::uint64_t seed);

// Rotating disk centered on the beam axis at the given range, rim speed
// v_max at the edge. v_max > 0 rotates scatterers at offset (dx, dz) from
// the center with velocity (v_max / radius) * (-dz, dx): the half left of
// the axis approaches the probe, the right half recedes.
PhantomState make_disk_phantom(double center_range_m, double radius_m, double v_max_mps,
                               double density_per_mm2, std::uint64_t seed);

// Lamb-Oseen vortex centered on the beam axis, cloud over a disk of
// support_radius_m around it.
PhantomState make_vortex_phantom(double center_range_m, double circulation_m2ps,
                                 double core_radius_m, double support_radius_m,
                                 double density_per_mm2, std::uint64_t seed);

// One explicit Euler step p += v dt, with optional per-axis Gaussian
// fluctuation sigma = fluctuation_frac * |v|. Scatterers stepping out of the
// support respawn uniformly with a fresh amplitude; the count is conserved.
// When respawned is non-null, indices of respawned scatterers are appended.
void advance_scatterers(PhantomState& state, double dt_s, Rng& rng,
                        std::vector<std::uint32_t>* respawned = nullptr);

struct TruthMap {
  RealField v_radial;  // m/s along the beam, positive away from the probe
  MaskField mask;      // pixel center inside the support
};

// Radial velocity of the flow sampled at pixel centers. Out-of-support
// pixels hold zero velocity and a false mask.
TruthMap truth_radial_map(const FlowField& flow, const Support& support, const ScanGeometry& geo);

}  // namespace doppler::phantom
