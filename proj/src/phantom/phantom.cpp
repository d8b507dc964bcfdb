#include "doppler/phantom/phantom.hpp"

namespace doppler::phantom {

PhantomState make_cloud(const FlowField& flow, const Support& support, double density_per_mm2,
                        std::uint64_t seed) {
  validate(support);
  require_data(density_per_mm2 > 0, "phantom: density_per_mm2 must be > 0");
  Rng rng(derive_seed(seed, "cloud"));
  const double area_mm2 = support.area_m2() * 1e6;
  const std::uint64_t count = rng.poisson(density_per_mm2 * area_mm2);

  PhantomState st;
  st.flow = flow;
  st.support = support;
  st.scatterers.resize(count);
  for (auto& sc : st.scatterers) {
    sc.pos_m = support.sample_point(rng);
    sc.amplitude = rng.rayleigh();
  }
  return st;
}

PhantomState make_disk_phantom(double center_range_m, double radius_m, double v_max_mps,
                               double density_per_mm2, std::uint64_t seed) {
  require_data(radius_m > 0, "phantom: disk radius must be > 0");
  const Vec2 center(0.0, center_range_m);
  const FlowField flow = FlowField::rigid_rotation(center, v_max_mps / radius_m, radius_m);
  return make_cloud(flow, Support::disk(center, radius_m), density_per_mm2, seed);
}

PhantomState make_vortex_phantom(double center_range_m, double circulation_m2ps,
                                 double core_radius_m, double support_radius_m,
                                 double density_per_mm2, std::uint64_t seed) {
  require_data(core_radius_m > 0, "phantom: vortex core radius must be > 0");
  const Vec2 center(0.0, center_range_m);
  const FlowField flow = FlowField::lamb_oseen(center, circulation_m2ps, core_radius_m);
  return make_cloud(flow, Support::disk(center, support_radius_m), density_per_mm2, seed);
}

void advance_scatterers(PhantomState& state, double dt_s, Rng& rng,
                        std::vector<std::uint32_t>* respawned) {
  const double frac = state.flow.fluctuation_frac;
  for (std::size_t m = 0; m < state.scatterers.size(); ++m) {
    auto& sc = state.scatterers[m];
    const Vec2 v = flow_velocity(state.flow, sc.pos_m);
    Vec2 step = v;
    if (frac > 0.0) {
      const double sigma = frac * v.norm();
      step.x() += rng.normal(0.0, sigma);
      step.y() += rng.normal(0.0, sigma);
    }
    sc.pos_m += step * dt_s;
    if (!state.support.contains(sc.pos_m)) {
      sc.pos_m = state.support.sample_point(rng);
      sc.amplitude = rng.rayleigh();
      if (respawned) respawned->push_back(static_cast<std::uint32_t>(m));
    }
  }
}

TruthMap truth_radial_map(const FlowField& flow, const Support& support, const ScanGeometry& geo) {
  validate(geo);
  TruthMap out;
  out.v_radial = RealField::Zero(geo.height, geo.width);
  out.mask = MaskField::Constant(geo.height, geo.width, false);
  for (int j = 0; j < geo.width; ++j) {
    const Vec2 d = geo.beam_direction(j);
    for (int i = 0; i < geo.height; ++i) {
      const Vec2 p = geo.radius_m(i) * d;
      if (!support.contains(p)) continue;
      out.mask(i, j) = true;
      out.v_radial(i, j) = flow_velocity(flow, p).dot(d);
    }
  }
  return out;
}

}  // namespace doppler::phantom
