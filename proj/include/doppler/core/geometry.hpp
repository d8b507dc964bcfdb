#pragma once

#include <cmath>

#include "doppler/common.hpp"

namespace doppler {

// Polar sector grid, apex at the origin. Row i indexes depth, column j
// indexes beam angle. Coordinates are (x lateral, z axial away from probe):
// a point at radius r on beam angle th sits at (r sin th, r cos th).
//
// angle_min_rad defaults to the symmetric window -sector_width/2; crops keep
// the beam directions of the parent grid by carrying an explicit window.
struct ScanGeometry {
  double depth_min_m = 0.10;
  double depth_max_m = 0.17;
  double sector_width_rad = 1.2217304763960306;  // 70 degrees
  double angle_min_rad = -0.6108652381980153;
  int height = 180;
  int width = 40;

  static ScanGeometry symmetric(double depth_min, double depth_max, double sector, int h, int w) {
    ScanGeometry g;
    g.depth_min_m = depth_min;
    g.depth_max_m = depth_max;
    g.sector_width_rad = sector;
    g.angle_min_rad = -0.5 * sector;
    g.height = h;
    g.width = w;
    return g;
  }

  double radius_m(int i) const {
    return depth_min_m + i * (depth_max_m - depth_min_m) / (height - 1);
  }
  double angle_rad(int j) const {
    return angle_min_rad + j * sector_width_rad / (width - 1);
  }
  double radial_step_m() const { return (depth_max_m - depth_min_m) / (height - 1); }
  double angular_step_rad() const { return sector_width_rad / (width - 1); }

  Vec2 beam_direction(int j) const {
    const double th = angle_rad(j);
    return Vec2(std::sin(th), std::cos(th));
  }
  Vec2 point(int i, int j) const { return radius_m(i) * beam_direction(j); }
};

inline void validate(const ScanGeometry& g) {
  require_data(g.depth_min_m > 0, "geometry: depth_min_m must be > 0");
  require_data(g.depth_max_m > g.depth_min_m, "geometry: depth_max_m must exceed depth_min_m");
  require_data(g.sector_width_rad > 0 && g.sector_width_rad < 3.141592653589793,
               "geometry: sector_width_rad must lie in (0, pi)");
  require_data(g.height >= 2 && g.width >= 2, "geometry: grid must be at least 2 x 2");
}

}  // namespace doppler
