#pragma once

#include <cmath>

#include "doppler/common.hpp"

namespace doppler::phantom {

// Steady 2-D flow fields in the scan plane (x lateral, z axial).
struct FlowField {
  enum class Kind { rigid_rotation, lamb_oseen, uniform, radial };

  Kind kind = Kind::uniform;
  Vec2 center = Vec2::Zero();     // rotation / vortex / radial origin
  double omega_rps = 0.0;         // rigid rotation rate, positive CCW
  double radius_m = 0.0;          // rigid rotation support radius
  double circulation_m2ps = 0.0;  // Lamb-Oseen circulation
  double core_radius_m = 0.0;     // Lamb-Oseen core size
  Vec2 uniform_mps = Vec2::Zero();
  double radial_speed_mps = 0.0;  // speed along +/-(p - center)
  double fluctuation_frac = 0.0;  // advection noise sigma as fraction of |v|

  static FlowField rigid_rotation(Vec2 center, double omega_rps, double radius_m) {
    FlowField f;
    f.kind = Kind::rigid_rotation;
    f.center = center;
    f.omega_rps = omega_rps;
    f.radius_m = radius_m;
    return f;
  }
  static FlowField lamb_oseen(Vec2 center, double circulation_m2ps, double core_radius_m) {
    FlowField f;
    f.kind = Kind::lamb_oseen;
    f.center = center;
    f.circulation_m2ps = circulation_m2ps;
    f.core_radius_m = core_radius_m;
    return f;
  }
  static FlowField uniform(Vec2 v_mps) {
    FlowField f;
    f.kind = Kind::uniform;
    f.uniform_mps = v_mps;
    return f;
  }
  static FlowField radial(Vec2 center, double speed_mps) {
    FlowField f;
    f.kind = Kind::radial;
    f.center = center;
    f.radial_speed_mps = speed_mps;
    return f;
  }
};

// CCW perpendicular: (x, z) -> (-z, x).
inline Vec2 perp(const Vec2& d) { return Vec2(-d.y(), d.x()); }

inline Vec2 flow_velocity(const FlowField& f, const Vec2& p) {
  switch (f.kind) {
    case FlowField::Kind::rigid_rotation: {
      const Vec2 d = p - f.center;
      if (d.squaredNorm() > f.radius_m * f.radius_m) return Vec2::Zero();
      return f.omega_rps * perp(d);
    }
    case FlowField::Kind::lamb_oseen: {
      const Vec2 d = p - f.center;
      const double rho2 = d.squaredNorm();
      if (rho2 < 1e-24) return Vec2::Zero();
      const double a2 = f.core_radius_m * f.core_radius_m;
      const double vt_over_rho =
          f.circulation_m2ps / (2.0 * kPi * rho2) * (1.0 - std::exp(-rho2 / a2));
      return vt_over_rho * perp(d);
    }
    case FlowField::Kind::uniform:
      return f.uniform_mps;
    case FlowField::Kind::radial: {
      const Vec2 d = p - f.center;
      const double rho = d.norm();
      if (rho < 1e-12) return Vec2::Zero();
      return (f.radial_speed_mps / rho) * d;
    }
  }
  return Vec2::Zero();
}

}  // namespace doppler::phantom
