#pragma once

#include <cmath>

#include "doppler/common.hpp"
#include "doppler/rng.hpp"

namespace doppler::phantom {

// Region scatterers live in. Points leaving it are respawned uniformly
// inside, so the cloud density is stationary.
struct Support {
  enum class Kind { disk, annulus, sector };

  Kind kind = Kind::disk;
  Vec2 center = Vec2::Zero();  // disk / annulus
  double r_inner_m = 0.0;
  double r_outer_m = 0.0;
  double depth_min_m = 0.0;    // sector, apex at origin
  double depth_max_m = 0.0;
  double angle_min_rad = 0.0;
  double angle_max_rad = 0.0;

  static Support disk(Vec2 center, double radius_m) {
    Support s;
    s.kind = Kind::disk;
    s.center = center;
    s.r_outer_m = radius_m;
    return s;
  }
  static Support annulus(Vec2 center, double r_inner_m, double r_outer_m) {
    Support s;
    s.kind = Kind::annulus;
    s.center = center;
    s.r_inner_m = r_inner_m;
    s.r_outer_m = r_outer_m;
    return s;
  }
  static Support sector(double depth_min_m, double depth_max_m, double angle_min_rad,
                        double angle_max_rad) {
    Support s;
    s.kind = Kind::sector;
    s.depth_min_m = depth_min_m;
    s.depth_max_m = depth_max_m;
    s.angle_min_rad = angle_min_rad;
    s.angle_max_rad = angle_max_rad;
    return s;
  }

  bool contains(const Vec2& p) const {
    switch (kind) {
      case Kind::disk:
        return (p - center).squaredNorm() <= r_outer_m * r_outer_m;
      case Kind::annulus: {
        const double d2 = (p - center).squaredNorm();
        return d2 >= r_inner_m * r_inner_m && d2 <= r_outer_m * r_outer_m;
      }
      case Kind::sector: {
        const double r = p.norm();
        if (r < depth_min_m || r > depth_max_m) return false;
        const double th = std::atan2(p.x(), p.y());
        return th >= angle_min_rad && th <= angle_max_rad;
      }
    }
    return false;
  }

  double area_m2() const {
    switch (kind) {
      case Kind::disk:
        return kPi * r_outer_m * r_outer_m;
      case Kind::annulus:
        return kPi * (r_outer_m * r_outer_m - r_inner_m * r_inner_m);
      case Kind::sector:
        return 0.5 * (angle_max_rad - angle_min_rad) *
               (depth_max_m * depth_max_m - depth_min_m * depth_min_m);
    }
    return 0.0;
  }

  // Uniform by area.
  Vec2 sample_point(Rng& rng) const {
    switch (kind) {
      case Kind::disk:
      case Kind::annulus: {
        const double r0 = kind == Kind::disk ? 0.0 : r_inner_m;
        const double r =
            std::sqrt(rng.uniform(r0 * r0, r_outer_m * r_outer_m));
        const double th = rng.uniform(0.0, 2.0 * kPi);
        return center + r * Vec2(std::cos(th), std::sin(th));
      }
      case Kind::sector: {
        const double r =
            std::sqrt(rng.uniform(depth_min_m * depth_min_m, depth_max_m * depth_max_m));
        const double th = rng.uniform(angle_min_rad, angle_max_rad);
        return r * Vec2(std::sin(th), std::cos(th));
      }
    }
    return Vec2::Zero();
  }
};

inline void validate(const Support& s) {
  switch (s.kind) {
    case Support::Kind::disk:
      require_data(s.r_outer_m > 0, "support: disk radius must be > 0");
      break;
    case Support::Kind::annulus:
      require_data(s.r_outer_m > s.r_inner_m && s.r_inner_m >= 0,
                   "support: annulus radii must satisfy 0 <= inner < outer");
      break;
    case Support::Kind::sector:
      require_data(s.depth_max_m > s.depth_min_m && s.depth_min_m >= 0,
                   "support: sector depths must satisfy 0 <= min < max");
      require_data(s.angle_max_rad > s.angle_min_rad, "support: sector angles must be increasing");
      break;
  }
}

}  // namespace doppler::phantom
