#include "doppler/augment/augment.hpp"

#include <algorithm>
#include <cmath>

#include "doppler/estimate/autocorrelation.hpp"
#include "doppler/rng.hpp"

namespace doppler::augment {

DopplerSample zoom_sample(const SceneSpec& scene, double ratio, std::uint64_t crop_seed) {
  require_data(ratio > 1.0, "zoom: ratio must exceed 1");
  const ScanGeometry& g = scene.geometry;

  // Fine grid covering the same extent, then an aligned random crop.
  const int fine_h = static_cast<int>(std::lround(g.height * ratio));
  const int fine_w = static_cast<int>(std::lround(g.width * ratio));
  const double fine_dr = (g.depth_max_m - g.depth_min_m) / (fine_h - 1);
  const double fine_da = g.sector_width_rad / (fine_w - 1);

  Rng rng(derive_seed(crop_seed, "crop"));
  const int i0 = static_cast<int>(rng.below(fine_h - g.height + 1));
  const int j0 = static_cast<int>(rng.below(fine_w - g.width + 1));

  SceneSpec zoomed = scene;
  zoomed.geometry.depth_min_m = g.depth_min_m + i0 * fine_dr;
  zoomed.geometry.depth_max_m = zoomed.geometry.depth_min_m + (g.height - 1) * fine_dr;
  zoomed.geometry.angle_min_rad = g.angle_min_rad + j0 * fine_da;
  zoomed.geometry.sector_width_rad = (g.width - 1) * fine_da;

  DopplerSample s = simulate_scene(zoomed);
  s.tags.erase(Tag::original);
  s.tags.insert(Tag::zoomed);
  return s;
}

DopplerSample flip_sample(const DopplerSample& sample) {
  DopplerSample out = sample;
  for (auto& f : out.iq.frames) f = f.rowwise().reverse().eval();
  out.truth.values = sample.truth.values.rowwise().reverse().eval();
  out.mask = sample.mask.rowwise().reverse().eval();
  const ScanGeometry& g = sample.iq.geometry;
  out.iq.geometry.angle_min_rad = -(g.angle_min_rad + g.sector_width_rad);
  if (!sample.scene_json.empty())
    out.scene_json = scene_to_json(mirror_scene(scene_from_json(sample.scene_json)));
  out.tags.erase(Tag::original);
  out.tags.insert(Tag::flipped);
  refresh_aliased_tag(out);
  return out;
}

DopplerSample make_aliased_variant(const SceneSpec& scene, std::uint64_t draw_seed) {
  Rng rng(derive_seed(draw_seed, "prf"));
  const double u = rng.uniform(0.4, 0.6);
  SceneSpec slow = scene;
  slow.params.prf_hz *= u;
  DopplerSample s = simulate_scene(slow);
  refresh_aliased_tag(s);
  return s;
}

void normalize_sample(DopplerSample& sample) {
  double peak = 0.0;
  for (const auto& f : sample.iq.frames) peak = std::max(peak, f.abs().maxCoeff());
  require_data(peak > 0.0, "normalize: ensemble is identically zero");
  for (auto& f : sample.iq.frames) f /= peak;
}

double low_power_fraction(const DopplerSample& sample, double power_threshold) {
  const auto ac = estimate::lag_one_autocorrelation(sample.iq);
  Eigen::Index in_mask = 0;
  Eigen::Index low = 0;
  for (Eigen::Index j = 0; j < sample.mask.cols(); ++j)
    for (Eigen::Index i = 0; i < sample.mask.rows(); ++i) {
      if (!sample.mask(i, j)) continue;
      ++in_mask;
      if (ac.r0(i, j) < power_threshold) ++low;
    }
  require_data(in_mask > 0, "power qc: sample mask is empty");
  return static_cast<double>(low) / static_cast<double>(in_mask);
}

bool power_qc(const DopplerSample& sample, double power_threshold, double max_low_fraction) {
  return low_power_fraction(sample, power_threshold) <= max_low_fraction;
}

double power_threshold_from_median(const std::vector<const DopplerSample*>& samples,
                                   double db_below) {
  std::vector<double> pooled;
  for (const DopplerSample* s : samples) {
    require_data(s != nullptr, "power threshold: null sample");
    const auto ac = estimate::lag_one_autocorrelation(s->iq);
    for (Eigen::Index j = 0; j < s->mask.cols(); ++j)
      for (Eigen::Index i = 0; i < s->mask.rows(); ++i)
        if (s->mask(i, j)) pooled.push_back(ac.r0(i, j));
  }
  require_data(!pooled.empty(), "power threshold: no in-mask pixels in dataset");
  const std::size_t mid = pooled.size() / 2;
  std::nth_element(pooled.begin(), pooled.begin() + mid, pooled.end());
  double median = pooled[mid];
  if (pooled.size() % 2 == 0) {
    const double upper = median;
    std::nth_element(pooled.begin(), pooled.begin() + mid - 1, pooled.begin() + mid);
    median = 0.5 * (pooled[mid - 1] + upper);
  }
  return median * std::pow(10.0, -db_below / 10.0);
}

}  // namespace doppler::augment
