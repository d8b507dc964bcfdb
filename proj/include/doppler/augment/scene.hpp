#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "doppler/acquire/psf.hpp"
#include "doppler/core/sample.hpp"
#include "doppler/phantom/phantom.hpp"

namespace doppler::augment {

// Everything needed to reproduce one simulated sample. A scene's seed
// drives the scatterer cloud, the advection fluctuations and the noise, so
// re-simulating an identical SceneSpec is bit-for-bit reproducible, and
// re-simulating with altered geometry or PRF keeps the same speckle
// realization.
struct SceneSpec {
  phantom::FlowField flow;
  phantom::Support support;
  double density_per_mm2 = 2.0;
  AcquisitionParams params;
  ScanGeometry geometry;
  acquire::PsfModel psf;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  std::string sequence_id;
};

DopplerSample simulate_scene(const SceneSpec& scene);

std::string scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const std::string& text);

// Lateral mirror of every scene ingredient, so a mirrored simulation has
// the same statistics as a mirrored sample.
SceneSpec mirror_scene(const SceneSpec& scene);

}  // namespace doppler::augment
