#pragma once

#include <set>
#include <string>
#include <vector>

#include "doppler/core/geometry.hpp"
#include "doppler/core/params.hpp"

namespace doppler {

// Slow-time baseband ensemble: packet_size frames of h x w complex samples.
struct IQEnsemble {
  std::vector<ComplexField> frames;
  AcquisitionParams params;
  ScanGeometry geometry;

  int height() const { return geometry.height; }
  int width() const { return geometry.width; }
  int packet() const { return static_cast<int>(frames.size()); }
};

inline void validate(const IQEnsemble& iq) {
  validate(iq.params);
  validate(iq.geometry);
  require_data(static_cast<int>(iq.frames.size()) == iq.params.packet_size,
               "ensemble: frame count must equal packet_size");
  for (const auto& f : iq.frames) {
    require_data(f.rows() == iq.geometry.height && f.cols() == iq.geometry.width,
                 "ensemble: frame shape must match geometry");
    require_data(f.allFinite(), "ensemble: samples must be finite");
  }
}

struct VelocityMap {
  RealField values;      // m/s, positive away from the probe
  double nyquist_mps = 0.0;
};

struct PhaseMap {
  RealField values;      // rad, in [-pi, pi]
};

using RoiMask = MaskField;

inline Eigen::Index roi_count(const RoiMask& m) { return m.count(); }

enum class Tag { original, zoomed, flipped, aliased };

inline const char* to_string(Tag t) {
  switch (t) {
    case Tag::original: return "original";
    case Tag::zoomed: return "zoomed";
    case Tag::flipped: return "flipped";
    case Tag::aliased: return "aliased";
  }
  return "original";
}

inline Tag tag_from_string(const std::string& s) {
  if (s == "original") return Tag::original;
  if (s == "zoomed") return Tag::zoomed;
  if (s == "flipped") return Tag::flipped;
  if (s == "aliased") return Tag::aliased;
  throw DataError("unknown sample tag '" + s + "'");
}

// One training/evaluation item: ensemble plus per-pixel ground truth
// radial velocity and region-of-interest mask. sequence_id groups samples
// that originate from the same underlying scene for fold splitting.
struct DopplerSample {
  IQEnsemble iq;
  VelocityMap truth;
  RoiMask mask;
  std::string sequence_id;
  std::set<Tag> tags;
  std::string scene_json;  // provenance for re-simulation; empty if unknown
};

// True when any in-mask pixel moves faster than the ensemble's Nyquist
// velocity, i.e. the lag-one phase of that pixel wraps.
inline bool has_aliasing(const VelocityMap& truth, const RoiMask& mask, double nyquist_mps) {
  for (Eigen::Index j = 0; j < mask.cols(); ++j)
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
      if (mask(i, j) && std::abs(truth.values(i, j)) > nyquist_mps) return true;
  return false;
}

// Keeps the aliased tag consistent with the data it describes.
inline void refresh_aliased_tag(DopplerSample& s) {
  if (has_aliasing(s.truth, s.mask, nyquist_velocity(s.iq.params)))
    s.tags.insert(Tag::aliased);
  else
    s.tags.erase(Tag::aliased);
}

inline void validate(const DopplerSample& s) {
  validate(s.iq);
  require_data(s.truth.values.rows() == s.iq.geometry.height &&
                   s.truth.values.cols() == s.iq.geometry.width,
               "sample: truth shape must match geometry");
  require_data(s.mask.rows() == s.iq.geometry.height && s.mask.cols() == s.iq.geometry.width,
               "sample: mask shape must match geometry");
  require_data(s.truth.values.allFinite(), "sample: truth must be finite");
  require_data(!s.sequence_id.empty(), "sample: sequence_id must be non-empty");
  const bool aliased = has_aliasing(s.truth, s.mask, nyquist_velocity(s.iq.params));
  require_data(aliased == s.tags.count(Tag::aliased),
               "sample: aliased tag must match truth vs Nyquist");
}

// v = -v_N * phi / pi. A +pi phase step of the slow-time signal corresponds
// to motion at -v_N (away-from-probe velocities give negative phase steps).
inline double phase_to_velocity(double phi, double nyquist_mps) {
  return -nyquist_mps * phi / kPi;
}

inline double velocity_to_phase(double v, double nyquist_mps) {
  require_data(nyquist_mps > 0, "velocity_to_phase: nyquist velocity must be > 0");
  return -kPi * v / nyquist_mps;
}

inline RealField phase_to_velocity(const RealField& phi, double nyquist_mps) {
  return (-nyquist_mps / kPi) * phi;
}

inline RealField velocity_to_phase(const RealField& v, double nyquist_mps) {
  require_data(nyquist_mps > 0, "velocity_to_phase: nyquist velocity must be > 0");
  return (-kPi / nyquist_mps) * v;
}

}  // namespace doppler
