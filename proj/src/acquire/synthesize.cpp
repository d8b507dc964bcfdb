#include "doppler/acquire/synthesize.hpp"

#include <cmath>
#include <vector>

namespace doppler::acquire {

namespace {

struct Hit {
  std::uint32_t scatterer;
  int row0;
  int rows;
  double amp;          // scatterer amplitude * lateral weight
  std::size_t weight_off;
};

}  // namespace

IQEnsemble synthesize_ensemble(const phantom::PhantomState& state, const ScanGeometry& geometry,
                               const AcquisitionParams& params, const PsfModel& psf,
                               std::optional<double> noise_snr_db, std::uint64_t seed) {
  validate(params);
  validate(geometry);
  validate(psf);
  require_data(!state.scatterers.empty(), "synthesize: phantom has no scatterers");

  const int h = geometry.height;
  const int w = geometry.width;
  const int n = params.packet_size;

  IQEnsemble iq;
  iq.params = params;
  iq.geometry = geometry;
  iq.frames.assign(n, ComplexField::Zero(h, w));

  phantom::PhantomState traj = state;
  Rng advance_rng(derive_seed(seed, "advance"));

  const double dt = params.pri_s();
  const double carrier = 4.0 * kPi * params.center_frequency_hz / params.sound_speed_mps;
  const double cut = psf.cutoff_sigmas;
  const double sig_ax = psf.axial_sigma_m;
  const double inv_2sig2 = 1.0 / (2.0 * sig_ax * sig_ax);
  const double dr = geometry.radial_step_m();
  const double r_lo = geometry.depth_min_m;
  const double band_lo = r_lo - cut * sig_ax;
  const double band_hi = geometry.depth_max_m + cut * sig_ax;
  // ratio of consecutive Gaussian step ratios; constant on a uniform grid
  const double q = std::exp(-dr * dr * 2.0 * inv_2sig2);

  const std::size_t count = traj.scatterers.size();
  std::vector<Hit> hits;
  std::vector<double> weights;
  std::vector<std::uint8_t> dropped(count);
  std::vector<std::uint32_t> respawned;

  for (int j = 0; j < w; ++j) {
    const Vec2 d = geometry.beam_direction(j);
    hits.clear();
    weights.clear();
    std::fill(dropped.begin(), dropped.end(), std::uint8_t{0});

    // Envelope weights for the whole packet, anchored at shot (j, 0).
    for (std::uint32_t m = 0; m < count; ++m) {
      const Vec2 p = traj.scatterers[m].pos_m;
      const double proj = p.x() * d.x() + p.y() * d.y();
      if (proj <= 0.0) continue;
      const double sig_lat = psf.lateral_sigma_at(proj);
      const double tan_cut = std::tan(std::min(cut * sig_lat, 1.4));
      const double perp = p.x() * d.y() - p.y() * d.x();
      if (std::abs(perp) > tan_cut * proj) continue;
      const double r = std::sqrt(proj * proj + perp * perp);
      if (r < band_lo || r > band_hi) continue;

      int row0 = static_cast<int>(std::ceil((r - cut * sig_ax - r_lo) / dr));
      int row1 = static_cast<int>(std::floor((r + cut * sig_ax - r_lo) / dr));
      if (row0 < 0) row0 = 0;
      if (row1 > h - 1) row1 = h - 1;
      if (row0 > row1) continue;

      const double dth = std::atan2(perp, proj);
      const double lat_w = std::exp(-dth * dth / (2.0 * sig_lat * sig_lat));

      const std::size_t off = weights.size();
      const double delta0 = r_lo + row0 * dr - r;
      double g = std::exp(-delta0 * delta0 * inv_2sig2);
      double t = std::exp(-(2.0 * delta0 * dr + dr * dr) * inv_2sig2);
      for (int i = row0; i <= row1; ++i) {
        weights.push_back(g);
        g *= t;
        t *= q;
      }
      hits.push_back(Hit{m, row0, row1 - row0 + 1, traj.scatterers[m].amplitude * lat_w, off});
    }

    for (int k = 0; k < n; ++k) {
      Complex* col = iq.frames[k].data() + static_cast<std::size_t>(j) * h;
      for (const Hit& hit : hits) {
        if (dropped[hit.scatterer]) continue;
        const double r = traj.scatterers[hit.scatterer].pos_m.norm();
        const double phase = -carrier * r;
        const Complex base = hit.amp * Complex(std::cos(phase), std::sin(phase));
        const double* wg = weights.data() + hit.weight_off;
        for (int i = 0; i < hit.rows; ++i) col[hit.row0 + i] += base * wg[i];
      }
      if (j == w - 1 && k == n - 1) break;
      respawned.clear();
      phantom::advance_scatterers(traj, dt, advance_rng, &respawned);
      for (std::uint32_t m : respawned) dropped[m] = 1;
    }
  }

  if (noise_snr_db) {
    const auto truth = phantom::truth_radial_map(state.flow, state.support, geometry);
    add_noise(iq, *noise_snr_db, truth.mask, derive_seed(seed, "noise"));
  }
  return iq;
}

void add_noise(IQEnsemble& iq, double snr_db, const RoiMask& reference_region,
               std::uint64_t seed) {
  require_data(reference_region.rows() == iq.geometry.height &&
                   reference_region.cols() == iq.geometry.width,
               "add_noise: region shape must match geometry");
  const Eigen::Index in_region = reference_region.count();
  require_data(in_region > 0, "add_noise: reference region is empty");

  double power = 0.0;
  for (const auto& f : iq.frames)
    for (Eigen::Index j = 0; j < f.cols(); ++j)
      for (Eigen::Index i = 0; i < f.rows(); ++i)
        if (reference_region(i, j)) power += std::norm(f(i, j));
  power /= static_cast<double>(in_region) * static_cast<double>(iq.frames.size());
  require_data(power > 0, "add_noise: reference region has zero signal power");

  const double noise_power = power * std::pow(10.0, -snr_db / 10.0);
  const double sd = std::sqrt(noise_power / 2.0);
  Rng rng(seed);
  for (auto& f : iq.frames)
    for (Eigen::Index i = 0; i < f.rows(); ++i)
      for (Eigen::Index j = 0; j < f.cols(); ++j)
        f(i, j) += Complex(rng.normal(0.0, sd), rng.normal(0.0, sd));
}

}  // namespace doppler::acquire
