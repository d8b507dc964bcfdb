#pragma once

#include "doppler/core/geometry.hpp"
#include "doppler/core/params.hpp"
#include "json.hpp"

namespace doppler {

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const AcquisitionParams& p) {
  ordered_json j;
  j["center_frequency_hz"] = p.center_frequency_hz;
  j["prf_hz"] = p.prf_hz;
  j["sound_speed_mps"] = p.sound_speed_mps;
  j["packet_size"] = p.packet_size;
  j["doppler_cycles"] = p.doppler_cycles;
  j["element_count"] = p.element_count;
  j["pitch_m"] = p.pitch_m;
  return j;
}

inline AcquisitionParams acquisition_from_json(const ordered_json& j) {
  AcquisitionParams p;
  p.center_frequency_hz = j.at("center_frequency_hz").get<double>();
  p.prf_hz = j.at("prf_hz").get<double>();
  p.sound_speed_mps = j.at("sound_speed_mps").get<double>();
  p.packet_size = j.at("packet_size").get<int>();
  p.doppler_cycles = j.at("doppler_cycles").get<double>();
  p.element_count = j.at("element_count").get<int>();
  p.pitch_m = j.at("pitch_m").get<double>();
  return p;
}

inline ordered_json to_json(const ScanGeometry& g) {
  ordered_json j;
  j["depth_min_m"] = g.depth_min_m;
  j["depth_max_m"] = g.depth_max_m;
  j["sector_width_rad"] = g.sector_width_rad;
  j["angle_min_rad"] = g.angle_min_rad;
  j["height"] = g.height;
  j["width"] = g.width;
  return j;
}

inline ScanGeometry geometry_from_json(const ordered_json& j) {
  ScanGeometry g;
  g.depth_min_m = j.at("depth_min_m").get<double>();
  g.depth_max_m = j.at("depth_max_m").get<double>();
  g.sector_width_rad = j.at("sector_width_rad").get<double>();
  g.angle_min_rad = j.at("angle_min_rad").get<double>();
  g.height = j.at("height").get<int>();
  g.width = j.at("width").get<int>();
  return g;
}

}  // namespace doppler
