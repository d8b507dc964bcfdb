#include "doppler/augment/scene.hpp"

#include "doppler/acquire/synthesize.hpp"
#include "doppler/core/json_io.hpp"

namespace doppler::augment {

namespace {

ordered_json flow_to_json(const phantom::FlowField& f) {
  using Kind = phantom::FlowField::Kind;
  ordered_json j;
  switch (f.kind) {
    case Kind::rigid_rotation:
      j["kind"] = "rigid_rotation";
      j["center_m"] = {f.center.x(), f.center.y()};
      j["omega_rps"] = f.omega_rps;
      j["radius_m"] = f.radius_m;
      break;
    case Kind::lamb_oseen:
      j["kind"] = "lamb_oseen";
      j["center_m"] = {f.center.x(), f.center.y()};
      j["circulation_m2ps"] = f.circulation_m2ps;
      j["core_radius_m"] = f.core_radius_m;
      break;
    case Kind::uniform:
      j["kind"] = "uniform";
      j["velocity_mps"] = {f.uniform_mps.x(), f.uniform_mps.y()};
      break;
    case Kind::radial:
      j["kind"] = "radial";
      j["center_m"] = {f.center.x(), f.center.y()};
      j["speed_mps"] = f.radial_speed_mps;
      break;
  }
  j["fluctuation_frac"] = f.fluctuation_frac;
  return j;
}

phantom::FlowField flow_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  phantom::FlowField f;
  auto vec2 = [](const ordered_json& a) { return Vec2(a.at(0).get<double>(), a.at(1).get<double>()); };
  if (kind == "rigid_rotation") {
    f = phantom::FlowField::rigid_rotation(vec2(j.at("center_m")), j.at("omega_rps").get<double>(),
                                           j.at("radius_m").get<double>());
  } else if (kind == "lamb_oseen") {
    f = phantom::FlowField::lamb_oseen(vec2(j.at("center_m")),
                                       j.at("circulation_m2ps").get<double>(),
                                       j.at("core_radius_m").get<double>());
  } else if (kind == "uniform") {
    f = phantom::FlowField::uniform(vec2(j.at("velocity_mps")));
  } else if (kind == "radial") {
    f = phantom::FlowField::radial(vec2(j.at("center_m")), j.at("speed_mps").get<double>());
  } else {
    throw DataError("scene: unknown flow kind '" + kind + "'");
  }
  f.fluctuation_frac = j.at("fluctuation_frac").get<double>();
  return f;
}

ordered_json support_to_json(const phantom::Support& s) {
  using Kind = phantom::Support::Kind;
  ordered_json j;
  switch (s.kind) {
    case Kind::disk:
      j["kind"] = "disk";
      j["center_m"] = {s.center.x(), s.center.y()};
      j["r_outer_m"] = s.r_outer_m;
      break;
    case Kind::annulus:
      j["kind"] = "annulus";
      j["center_m"] = {s.center.x(), s.center.y()};
      j["r_inner_m"] = s.r_inner_m;
      j["r_outer_m"] = s.r_outer_m;
      break;
    case Kind::sector:
      j["kind"] = "sector";
      j["depth_min_m"] = s.depth_min_m;
      j["depth_max_m"] = s.depth_max_m;
      j["angle_min_rad"] = s.angle_min_rad;
      j["angle_max_rad"] = s.angle_max_rad;
      break;
  }
  return j;
}

phantom::Support support_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  auto vec2 = [](const ordered_json& a) { return Vec2(a.at(0).get<double>(), a.at(1).get<double>()); };
  if (kind == "disk")
    return phantom::Support::disk(vec2(j.at("center_m")), j.at("r_outer_m").get<double>());
  if (kind == "annulus")
    return phantom::Support::annulus(vec2(j.at("center_m")), j.at("r_inner_m").get<double>(),
                                     j.at("r_outer_m").get<double>());
  if (kind == "sector")
    return phantom::Support::sector(j.at("depth_min_m").get<double>(),
                                    j.at("depth_max_m").get<double>(),
                                    j.at("angle_min_rad").get<double>(),
                                    j.at("angle_max_rad").get<double>());
  throw DataError("scene: unknown support kind '" + kind + "'");
}

ordered_json psf_to_json(const acquire::PsfModel& p) {
  ordered_json j;
  j["axial_sigma_m"] = p.axial_sigma_m;
  j["lateral_sigma_rad"] = p.lateral_sigma_rad;
  j["cutoff_sigmas"] = p.cutoff_sigmas;
  return j;
}

acquire::PsfModel psf_from_json(const ordered_json& j) {
  acquire::PsfModel p;
  p.axial_sigma_m = j.at("axial_sigma_m").get<double>();
  p.lateral_sigma_rad = j.at("lateral_sigma_rad").get<double>();
  p.cutoff_sigmas = j.at("cutoff_sigmas").get<double>();
  return p;
}

}  // namespace

DopplerSample simulate_scene(const SceneSpec& scene) {
  require_data(!scene.sequence_id.empty(), "scene: sequence_id must be non-empty");
  const auto state = phantom::make_cloud(scene.flow, scene.support, scene.density_per_mm2,
                                         derive_seed(scene.seed, "phantom"));
  DopplerSample s;
  s.iq = acquire::synthesize_ensemble(state, scene.geometry, scene.params, scene.psf, scene.snr_db,
                                      derive_seed(scene.seed, "acquire"));
  const auto truth = phantom::truth_radial_map(scene.flow, scene.support, scene.geometry);
  s.truth.values = truth.v_radial;
  s.truth.nyquist_mps = nyquist_velocity(scene.params);
  s.mask = truth.mask;
  s.sequence_id = scene.sequence_id;
  s.tags = {Tag::original};
  s.scene_json = scene_to_json(scene);
  refresh_aliased_tag(s);
  return s;
}

std::string scene_to_json(const SceneSpec& scene) {
  ordered_json j;
  j["flow"] = flow_to_json(scene.flow);
  j["support"] = support_to_json(scene.support);
  j["density_per_mm2"] = scene.density_per_mm2;
  j["acquisition"] = to_json(scene.params);
  j["geometry"] = to_json(scene.geometry);
  j["psf"] = psf_to_json(scene.psf);
  if (scene.snr_db)
    j["snr_db"] = *scene.snr_db;
  else
    j["snr_db"] = nullptr;
  j["seed"] = scene.seed;
  j["sequence_id"] = scene.sequence_id;
  return j.dump();
}

SceneSpec scene_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scene: invalid json: ") + e.what());
  }
  try {
    SceneSpec s;
    s.flow = flow_from_json(j.at("flow"));
    s.support = support_from_json(j.at("support"));
    s.density_per_mm2 = j.at("density_per_mm2").get<double>();
    s.params = acquisition_from_json(j.at("acquisition"));
    s.geometry = geometry_from_json(j.at("geometry"));
    s.psf = psf_from_json(j.at("psf"));
    if (!j.at("snr_db").is_null()) s.snr_db = j.at("snr_db").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.sequence_id = j.at("sequence_id").get<std::string>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scene: bad field: ") + e.what());
  }
}

SceneSpec mirror_scene(const SceneSpec& scene) {
  using FKind = phantom::FlowField::Kind;
  using SKind = phantom::Support::Kind;
  SceneSpec m = scene;
  m.flow.center.x() = -m.flow.center.x();
  switch (m.flow.kind) {
    case FKind::rigid_rotation:
      m.flow.omega_rps = -m.flow.omega_rps;
      break;
    case FKind::lamb_oseen:
      m.flow.circulation_m2ps = -m.flow.circulation_m2ps;
      break;
    case FKind::uniform:
      m.flow.uniform_mps.x() = -m.flow.uniform_mps.x();
      break;
    case FKind::radial:
      break;
  }
  if (m.support.kind == SKind::sector) {
    const double lo = m.support.angle_min_rad;
    m.support.angle_min_rad = -m.support.angle_max_rad;
    m.support.angle_max_rad = -lo;
  } else {
    m.support.center.x() = -m.support.center.x();
  }
  m.geometry.angle_min_rad = -(scene.geometry.angle_min_rad + scene.geometry.sector_width_rad);
  return m;
}

}  // namespace doppler::augment
