#include "doppler/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <vector>

#include "doppler/augment/augment.hpp"
#include "doppler/augment/manifest.hpp"
#include "doppler/cli/formats.hpp"
#include "doppler/clutter/svd_filter.hpp"
#include "doppler/core/bundle.hpp"
#include "doppler/estimate/autocorrelation.hpp"
#include "doppler/nn/checkpoint.hpp"
#include "doppler/nn/train.hpp"
#include "doppler/rng.hpp"

namespace doppler::cli {

namespace fs = std::filesystem;

namespace {

AcquisitionParams acquisition_from_config(const Config& cfg) {
  AcquisitionParams p;
  p.center_frequency_hz = cfg.get_double_or("acquire", "center_frequency_hz", p.center_frequency_hz);
  p.prf_hz = cfg.get_double_or("acquire", "prf_hz", p.prf_hz);
  p.sound_speed_mps = cfg.get_double_or("acquire", "sound_speed_mps", p.sound_speed_mps);
  p.packet_size = static_cast<int>(cfg.get_int_or("acquire", "packet_size", p.packet_size));
  p.doppler_cycles = cfg.get_double_or("acquire", "doppler_cycles", p.doppler_cycles);
  p.element_count = static_cast<int>(cfg.get_int_or("acquire", "element_count", p.element_count));
  p.pitch_m = cfg.get_double_or("acquire", "pitch_m", p.pitch_m);
  validate(p);
  return p;
}

ScanGeometry geometry_from_config(const Config& cfg) {
  const ScanGeometry d;
  const ScanGeometry g = ScanGeometry::symmetric(
      cfg.get_double_or("geometry", "depth_min_m", d.depth_min_m),
      cfg.get_double_or("geometry", "depth_max_m", d.depth_max_m),
      cfg.get_double_or("geometry", "sector_width_rad", d.sector_width_rad),
      static_cast<int>(cfg.get_int_or("geometry", "height", d.height)),
      static_cast<int>(cfg.get_int_or("geometry", "width", d.width)));
  validate(g);
  return g;
}

// Peak tangential speed of a Lamb-Oseen vortex sits at rho = 1.1209109 a
// and equals circulation / (2 pi a) times this factor.
double vortex_peak_factor() {
  constexpr double x = 1.1209109;
  return (1.0 - std::exp(-x * x)) / x;
}

// Per-sample accuracy of an estimated velocity field against truth, split
// by whether the true speed exceeds the Nyquist velocity (i.e. whether the
// lag-one phase of that pixel wraps). Empty subsets report NaN.
struct VelocityMetrics {
  double speed_mps = 0.0;  // max |truth| over the mask
  long mask_px = 0;
  long aliased_px = 0;
  double rmse = 0.0;
  double rmse_alias_free = 0.0;
  double rmse_aliased = 0.0;
};

VelocityMetrics velocity_metrics(const RealField& truth, const MaskField& mask,
                                 const RealField& estimate, double nyquist_mps) {
  require_data(truth.rows() == estimate.rows() && truth.cols() == estimate.cols() &&
                   truth.rows() == mask.rows() && truth.cols() == mask.cols(),
               "metrics: field shapes must match");
  VelocityMetrics m;
  double sq_all = 0.0, sq_free = 0.0, sq_alias = 0.0;
  long n_free = 0;
  for (Eigen::Index j = 0; j < mask.cols(); ++j)
    for (Eigen::Index i = 0; i < mask.rows(); ++i) {
      if (!mask(i, j)) continue;
      const double t = truth(i, j);
      const double e = estimate(i, j) - t;
      ++m.mask_px;
      sq_all += e * e;
      m.speed_mps = std::max(m.speed_mps, std::abs(t));
      if (std::abs(t) > nyquist_mps) {
        ++m.aliased_px;
        sq_alias += e * e;
      } else {
        ++n_free;
        sq_free += e * e;
      }
    }
  const auto rmse = [](double sq, long n) {
    return n > 0 ? std::sqrt(sq / static_cast<double>(n))
                 : std::numeric_limits<double>::quiet_NaN();
  };
  m.rmse = rmse(sq_all, m.mask_px);
  m.rmse_alias_free = rmse(sq_free, n_free);
  m.rmse_aliased = rmse(sq_alias, m.aliased_px);
  return m;
}

// A dataset directory holds a manifest; a single bundle directory holds
// meta.json. Returns (name, bundle dir) pairs in manifest order.
std::vector<std::pair<std::string, fs::path>> list_input_bundles(const fs::path& in_dir) {
  std::vector<std::pair<std::string, fs::path>> out;
  if (fs::exists(in_dir / "manifest.json")) {
    const auto manifest = augment::read_manifest(in_dir / "manifest.json");
    for (const auto& e : manifest.entries) out.emplace_back(e.path, in_dir / e.path);
  } else if (fs::exists(in_dir / "meta.json")) {
    out.emplace_back(in_dir.filename().string(), in_dir);
  } else {
    throw DataError("no manifest.json or meta.json under " + in_dir.string());
  }
  return out;
}

// Fold checkpoint directories under models_dir, sorted by name; a bare
// checkpoint directory is accepted as a one-model ensemble.
std::vector<fs::path> list_checkpoints(const fs::path& models_dir) {
  std::vector<fs::path> dirs;
  if (fs::exists(models_dir / "meta.json")) {
    dirs.push_back(models_dir);
    return dirs;
  }
  if (fs::is_directory(models_dir))
    for (const auto& entry : fs::directory_iterator(models_dir)) {
      if (!entry.is_directory()) continue;
      const std::string name = entry.path().filename().string();
      if (name.rfind("fold", 0) == 0 && fs::exists(entry.path() / "meta.json"))
        dirs.push_back(entry.path());
    }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw DataError("no model checkpoints under " + models_dir.string());
  return dirs;
}

std::vector<std::unique_ptr<nn::Model<float>>> load_ensemble(const fs::path& models_dir) {
  std::vector<std::unique_ptr<nn::Model<float>>> models;
  for (const auto& dir : list_checkpoints(models_dir)) {
    auto m = nn::load_model<float>(dir);
    if (!models.empty() &&
        (m->arch() != models.front()->arch() || m->packet != models.front()->packet))
      throw DataError("checkpoint " + dir.string() + " does not match the rest of the ensemble");
    models.push_back(std::move(m));
  }
  return models;
}

IQEnsemble reduced(const IQEnsemble& iq, int packet, const std::string& name) {
  if (packet <= 0 || packet == iq.packet()) return iq;
  require_data(packet <= iq.packet(), "packet " + std::to_string(packet) + " exceeds the " +
                                          std::to_string(iq.packet()) +
                                          " slow-time frames of '" + name + "'");
  return estimate::reduce_packet(iq, 0, packet);
}

bool in_folds(const std::vector<int>& folds, int fold) {
  return folds.empty() || std::find(folds.begin(), folds.end(), fold) != folds.end();
}

std::string fold_dir_name(int fold) {
  return fold < 0 ? "fold_all" : "fold" + std::to_string(fold);
}

}  // namespace

void cmd_simulate(const Config& cfg, const fs::path& out_dir) {
  augment::SceneSpec base;
  base.params = acquisition_from_config(cfg);
  base.geometry = geometry_from_config(cfg);
  base.psf = acquire::default_psf(base.params);
  if (cfg.has("acquire", "snr_db")) base.snr_db = cfg.get_double("acquire", "snr_db");
  base.density_per_mm2 = cfg.get_double_or("phantom", "density_per_mm2", base.density_per_mm2);

  const std::string kind = cfg.get_string_or("phantom", "kind", "disk");
  require_config(kind == "disk" || kind == "vortex" || kind == "uniform" || kind == "radial" ||
                     kind == "mixed",
                 "[phantom] kind: expected disk, vortex, uniform, radial or mixed, got '" +
                     kind + "'");

  const double mid_depth = 0.5 * (base.geometry.depth_min_m + base.geometry.depth_max_m);
  const double center_x = cfg.get_double_or("phantom", "center_x_m", 0.0);
  const double center_depth = cfg.get_double_or("phantom", "center_depth_m", mid_depth);
  const double radius = cfg.get_double_or("phantom", "radius_m", 0.02);
  const double core_radius = cfg.get_double_or("phantom", "core_radius_m", 0.008);
  const double support_radius = cfg.get_double_or("phantom", "support_radius_m", radius);
  const double fluctuation = cfg.get_double_or("phantom", "fluctuation_frac", 0.1);
  require_config(radius > 0 && core_radius > 0 && support_radius > 0,
                 "[phantom] radii must be > 0");

  const std::vector<double> speeds = cfg.get_double_list("simulate", "speeds_mps");
  const int count =
      speeds.empty() ? static_cast<int>(cfg.get_int_or("simulate", "count", 0)) : static_cast<int>(speeds.size());
  require_config(count > 0, "[simulate] needs speeds_mps or a positive count");
  const double v_max = cfg.get_double_or("phantom", "v_max_mps", 0.5);
  const double speed_min = cfg.get_double_or("simulate", "speed_min_mps", 0.1);
  const double speed_max = cfg.get_double_or("simulate", "speed_max_mps", 1.1);
  require_config(speed_min > 0 && speed_max >= speed_min,
                 "[simulate] speed range must satisfy 0 < speed_min_mps <= speed_max_mps");
  const bool randomize = cfg.get_bool_or("simulate", "randomize_centers", speeds.empty());
  const std::string prefix = cfg.get_string_or("simulate", "id_prefix", "s");
  const std::uint64_t root = effective_seed(cfg, "simulate", 424242);

  fs::create_directories(out_dir);
  augment::DatasetManifest manifest;
  manifest.fold_count = 0;

  const double nyquist = nyquist_velocity(base.params);
  std::cout << "simulate: f_c " << base.params.center_frequency_hz << " Hz, prf "
            << base.params.prf_hz << " Hz, packet " << base.params.packet_size << ", grid "
            << base.geometry.height << "x" << base.geometry.width << ", nyquist " << nyquist
            << " m/s\n";
  std::cout << "simulate: kind " << kind << ", samples " << count << ", seed " << root << "\n";
  for (const std::string& line : cfg.describe()) std::cout << "config: " << line << "\n";

  for (int idx = 0; idx < count; ++idx) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof(id_buf), "%s%02d", prefix.c_str(), idx);
    const std::string id = id_buf;

    Rng draw(derive_seed(root, "draw:" + id));
    double speed = v_max;
    if (!speeds.empty()) {
      speed = speeds[static_cast<std::size_t>(idx)];
    } else {
      speed = draw.uniform(speed_min, speed_max);
      if (draw.uniform() < 0.5) speed = -speed;
    }

    Vec2 center(center_x, center_depth);
    if (randomize) {
      const double pad = radius + 2.0 * base.geometry.radial_step_m();
      const double lo = base.geometry.depth_min_m + pad;
      const double hi = base.geometry.depth_max_m - pad;
      require_config(lo < hi, "[phantom] radius_m too large for the scan depth range");
      const double depth = draw.uniform(lo, hi);
      const double quarter = 0.25 * base.geometry.sector_width_rad;
      const double theta = draw.uniform(base.geometry.angle_min_rad + quarter,
                                        base.geometry.angle_min_rad +
                                            base.geometry.sector_width_rad - quarter);
      center = Vec2(depth * std::sin(theta), depth * std::cos(theta));
    }

    std::string resolved = kind;
    if (kind == "mixed") resolved = (idx % 2 == 0) ? "disk" : "vortex";

    augment::SceneSpec scene = base;
    if (resolved == "disk") {
      scene.flow = phantom::FlowField::rigid_rotation(center, speed / radius, radius);
      scene.support = phantom::Support::disk(center, radius);
    } else if (resolved == "vortex") {
      const double circulation = speed * 2.0 * kPi * core_radius / vortex_peak_factor();
      scene.flow = phantom::FlowField::lamb_oseen(center, circulation, core_radius);
      scene.support = phantom::Support::disk(center, support_radius);
    } else if (resolved == "radial") {
      scene.flow = phantom::FlowField::radial(center, speed);
      scene.support = phantom::Support::disk(center, radius);
    } else {
      Vec2 dir(cfg.get_double_or("phantom", "vx_mps", 0.0),
               cfg.get_double_or("phantom", "vz_mps", 0.0));
      if (dir.norm() < 1e-12) dir = Vec2(0.0, 1.0);
      dir.normalize();
      scene.flow = phantom::FlowField::uniform(dir * speed);
      scene.support = phantom::Support::sector(
          base.geometry.depth_min_m, base.geometry.depth_max_m, base.geometry.angle_min_rad,
          base.geometry.angle_min_rad + base.geometry.sector_width_rad);
    }
    scene.flow.fluctuation_frac = fluctuation;
    scene.seed = derive_seed(root, "sim:" + id);
    scene.sequence_id = id;

    const DopplerSample sample = augment::simulate_scene(scene);
    write_bundle(out_dir / id, sample);
    manifest.entries.push_back({id, id, sample.tags, -1});
    std::cout << "simulate: " << id << " " << resolved << " speed " << speed << " m/s\n";
  }

  augment::write_manifest(out_dir / "manifest.json", manifest);
  std::cout << "simulate: wrote " << count << " bundles to " << out_dir.string() << "\n";
}

void cmd_augment(const Config& cfg, const fs::path& in_dir, const fs::path& out_dir) {
  const auto manifest_in = augment::read_manifest(in_dir / "manifest.json");
  const bool flips = cfg.get_bool_or("augment", "flips", true);
  const int zooms = static_cast<int>(cfg.get_int_or("augment", "zooms", 1));
  const double zoom_ratio = cfg.get_double_or("augment", "zoom_ratio", 1.5);
  const int aliased = static_cast<int>(cfg.get_int_or("augment", "aliased", 1));
  const int folds = static_cast<int>(cfg.get_int_or("augment", "folds", 5));
  const bool screen = cfg.get_bool_or("augment", "power_screen", true);
  const double db_below = cfg.get_double_or("augment", "power_db_below", 20.0);
  const double max_low = cfg.get_double_or("augment", "max_low_fraction", 0.7);
  require_config(zooms >= 0 && aliased >= 0, "[augment] zooms and aliased must be >= 0");
  require_config(zoom_ratio > 1.0, "[augment] zoom_ratio must exceed 1");
  const std::uint64_t root = effective_seed(cfg, "augment", 31337);

  struct Candidate {
    std::string name;
    std::string sequence_id;
    DopplerSample sample;
  };
  std::vector<Candidate> candidates;
  for (const auto& entry : manifest_in.entries) {
    DopplerSample sample = read_bundle(in_dir / entry.path);
    if ((zooms > 0 || aliased > 0) && sample.scene_json.empty())
      throw DataError("bundle '" + entry.path +
                      "' has no scene provenance; cannot re-simulate variants");
    const augment::SceneSpec scene =
        (zooms > 0 || aliased > 0) ? augment::scene_from_json(sample.scene_json)
                                   : augment::SceneSpec{};

    if (flips)
      candidates.push_back({entry.path + "_f", entry.sequence_id, augment::flip_sample(sample)});
    for (int k = 0; k < zooms; ++k)
      candidates.push_back(
          {entry.path + "_z" + std::to_string(k), entry.sequence_id,
           augment::zoom_sample(scene, zoom_ratio,
                                derive_seed(root, "zoom:" + entry.path + ":" + std::to_string(k)))});
    for (int k = 0; k < aliased; ++k)
      candidates.push_back(
          {entry.path + "_a" + std::to_string(k), entry.sequence_id,
           augment::make_aliased_variant(
               scene, derive_seed(root, "alias:" + entry.path + ":" + std::to_string(k)))});
    candidates.push_back({entry.path, entry.sequence_id, std::move(sample)});
  }

  long dropped = 0;
  std::vector<const Candidate*> kept;
  if (screen) {
    std::vector<const DopplerSample*> all;
    all.reserve(candidates.size());
    for (const auto& c : candidates) all.push_back(&c.sample);
    const double threshold = augment::power_threshold_from_median(all, db_below);
    for (const auto& c : candidates) {
      if (augment::power_qc(c.sample, threshold, max_low))
        kept.push_back(&c);
      else
        ++dropped;
    }
  } else {
    for (const auto& c : candidates) kept.push_back(&c);
  }
  require_data(!kept.empty(), "augment: power screening dropped every sample");

  // Manifest order groups each source sample with its variants.
  std::sort(kept.begin(), kept.end(),
            [](const Candidate* a, const Candidate* b) { return a->name < b->name; });

  fs::create_directories(out_dir);
  augment::DatasetManifest manifest_out;
  manifest_out.fold_count = 0;
  for (const Candidate* c : kept) {
    write_bundle(out_dir / c->name, c->sample);
    manifest_out.entries.push_back({c->name, c->sequence_id, c->sample.tags, -1});
  }
  if (folds >= 2) augment::split_folds(manifest_out, folds, root);
  augment::write_manifest(out_dir / "manifest.json", manifest_out);

  std::cout << "augment: kept " << kept.size() << " samples (dropped " << dropped << ") in "
            << out_dir.string() << "\n";
  for (const auto& [tag, n] : augment::tag_counts(manifest_out))
    std::cout << "augment: tag " << tag << " x" << n << "\n";
}

void cmd_filter(const Config& cfg, const fs::path& in_dir, const fs::path& out_dir) {
  const int discard = static_cast<int>(cfg.get_int_or("filter", "discard", 1));
  const int subsample = static_cast<int>(cfg.get_int_or("filter", "subsample", 1));
  require_config(discard >= 0, "[filter] discard must be >= 0");
  require_config(subsample >= 1, "[filter] subsample must be >= 1");

  const auto manifest_in = augment::read_manifest(in_dir / "manifest.json");
  fs::create_directories(out_dir);
  augment::DatasetManifest manifest_out;
  manifest_out.fold_count = manifest_in.fold_count;

  for (const auto& entry : manifest_in.entries) {
    DopplerSample sample = read_bundle(in_dir / entry.path);
    if (discard > 0) sample.iq = clutter::svd_clutter_filter(sample.iq, discard);
    if (subsample > 1) sample.iq = clutter::slow_time_subsample(sample.iq, subsample);
    sample.truth.nyquist_mps = nyquist_velocity(sample.iq.params);
    refresh_aliased_tag(sample);
    write_bundle(out_dir / entry.path, sample);
    manifest_out.entries.push_back({entry.path, entry.sequence_id, sample.tags, entry.fold});
  }
  augment::write_manifest(out_dir / "manifest.json", manifest_out);
  std::cout << "filter: discard " << discard << ", subsample " << subsample << ", wrote "
            << manifest_out.entries.size() << " bundles to " << out_dir.string() << "\n";
}

void cmd_estimate(const Config& cfg, const fs::path& in_dir, const fs::path& out_dir) {
  const int packet = static_cast<int>(cfg.get_int_or("estimate", "packet", 0));
  const bool smoothed = cfg.get_bool_or("estimate", "smoothed", true);
  const int axial_taps = static_cast<int>(cfg.get_int_or("estimate", "axial_taps", 10));
  const int lateral_taps = static_cast<int>(cfg.get_int_or("estimate", "lateral_taps", 4));
  const int discard = static_cast<int>(cfg.get_int_or("estimate", "discard", 0));
  require_config(packet == 0 || packet >= 2, "[estimate] packet must be 0 (full) or >= 2");
  require_config(discard >= 0, "[estimate] discard must be >= 0");

  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  for (const auto& [name, dir] : list_input_bundles(in_dir)) {
    const DopplerSample sample = read_bundle(dir);
    IQEnsemble iq = sample.iq;
    if (discard > 0) iq = clutter::svd_clutter_filter(iq, discard);
    iq = reduced(iq, packet, name);
    const VelocityMap vm = estimate::doppler_velocity_map(iq, smoothed, axial_taps, lateral_taps);
    write_velocity_map(out_dir / (name + ".vmap"), vm);

    const VelocityMetrics m =
        velocity_metrics(sample.truth.values, sample.mask, vm.values, vm.nyquist_mps);
    rows.push_back({name, format_number(m.speed_mps), format_number(vm.nyquist_mps),
                    std::to_string(m.mask_px), std::to_string(m.aliased_px),
                    format_number(m.rmse), format_number(m.rmse_alias_free),
                    format_number(m.rmse_aliased)});
    std::cout << "estimate: " << name << " rmse " << m.rmse << " m/s over " << m.mask_px
              << " px\n";
  }
  write_csv(out_dir / "metrics.csv",
            {"name", "speed_mps", "nyquist_mps", "mask_pixels", "aliased_pixels", "rmse_mps",
             "rmse_alias_free_mps", "rmse_aliased_mps"},
            rows);
  std::cout << "estimate: wrote " << rows.size() << " velocity maps to " << out_dir.string()
            << "\n";
}

void cmd_train(const Config& cfg, const fs::path& data_dir, const fs::path& out_dir) {
  nn::TrainConfig tc;
  tc.arch = cfg.get_string_or("train", "arch", tc.arch);
  tc.packet = static_cast<int>(cfg.get_int_or("train", "packet", tc.packet));
  tc.batch = static_cast<int>(cfg.get_int_or("train", "batch", tc.batch));
  tc.epochs = static_cast<int>(cfg.get_int_or("train", "epochs", tc.epochs));
  tc.lr = cfg.get_double_or("train", "lr", tc.lr);
  tc.weight_decay = cfg.get_double_or("train", "weight_decay", tc.weight_decay);
  tc.plateau.factor = cfg.get_double_or("train", "plateau_factor", tc.plateau.factor);
  tc.plateau.patience =
      static_cast<int>(cfg.get_int_or("train", "plateau_patience", tc.plateau.patience));
  tc.plateau.rel_threshold =
      cfg.get_double_or("train", "plateau_rel_threshold", tc.plateau.rel_threshold);
  tc.plateau.min_lr = cfg.get_double_or("train", "min_lr", tc.plateau.min_lr);
  tc.stop_train_loss = cfg.get_double_or("train", "stop_train_loss", tc.stop_train_loss);
  tc.seed = effective_seed(cfg, "train", tc.seed);

  const auto data = nn::load_dataset(data_dir / "manifest.json", tc.packet);
  std::cout << "train: arch " << tc.arch << ", packet " << tc.packet << ", " << data.items.size()
            << " items, " << data.fold_count << " folds, seed " << tc.seed << "\n";

  fs::create_directories(out_dir);
  const auto write_fold = [&](int fold, nn::Model<float>& model,
                              const std::vector<nn::EpochStats>& stats) {
    const fs::path fold_dir = out_dir / fold_dir_name(fold);
    nn::save_model(model, fold_dir);
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : stats)
      rows.push_back({std::to_string(s.epoch), format_number(s.train_loss),
                      format_number(s.val_loss), format_number(s.lr)});
    write_csv(fold_dir / "log.csv", {"epoch", "train_loss", "val_loss", "lr"}, rows);
    std::cout << "train: " << fold_dir_name(fold) << " finished after " << stats.size()
              << " epochs, train " << (stats.empty() ? 0.0 : stats.back().train_loss) << ", val "
              << (stats.empty() ? 0.0 : stats.back().val_loss) << "\n";
  };
  const auto echo_epoch = [](const nn::EpochStats& s) {
    std::cout << "  epoch " << s.epoch << " train " << s.train_loss << " val " << s.val_loss
              << " lr " << s.lr << "\n";
  };

  std::vector<int> folds = cfg.get_int_list("train", "folds");
  if (folds.empty() && data.fold_count >= 2) folds = {0};
  if (!folds.empty()) {
    const auto results = nn::train_kfold(data, tc, folds, echo_epoch);
    for (const auto& r : results) write_fold(r.fold, *r.model, r.stats);
  } else {
    auto model = nn::make_model<float>(tc.arch, tc.packet, derive_seed(tc.seed, "fold:-1"));
    std::vector<const nn::TrainingItem*> train_items;
    for (const auto& item : data.items) train_items.push_back(&item);
    const auto stats = nn::train_model(*model, train_items, {}, tc, echo_epoch);
    write_fold(-1, *model, stats);
  }
}

void cmd_infer(const Config& cfg, const fs::path& data_dir, const fs::path& models_dir,
               const fs::path& out_dir) {
  const auto models = load_ensemble(models_dir);
  std::vector<nn::Model<float>*> ensemble;
  for (const auto& m : models) ensemble.push_back(m.get());
  const int packet = models.front()->packet;
  const std::vector<int> folds = cfg.get_int_list("infer", "folds");

  const auto manifest = augment::read_manifest(data_dir / "manifest.json");
  fs::create_directories(out_dir);
  long written = 0;
  for (const auto& entry : manifest.entries) {
    if (!in_folds(folds, entry.fold)) continue;
    const DopplerSample sample = read_bundle(data_dir / entry.path);
    const nn::TrainingItem item = nn::make_training_item(sample, packet);
    const RealField phase = nn::ensemble_phase(ensemble, item);
    VelocityMap vm;
    vm.values = phase_to_velocity(phase, item.nyquist_mps);
    vm.nyquist_mps = item.nyquist_mps;
    write_velocity_map(out_dir / (entry.path + ".vmap"), vm);
    ++written;
  }
  std::cout << "infer: " << models.front()->arch() << " x" << models.size() << ", packet "
            << packet << ", wrote " << written << " velocity maps to " << out_dir.string()
            << "\n";
}

void cmd_eval(const Config& cfg, const fs::path& data_dir, const fs::path& models_dir,
              const fs::path& out_dir) {
  const bool with_models = !models_dir.empty();
  std::vector<std::unique_ptr<nn::Model<float>>> models;
  std::vector<nn::Model<float>*> ensemble;
  if (with_models) {
    models = load_ensemble(models_dir);
    for (const auto& m : models) ensemble.push_back(m.get());
  }

  int packet = static_cast<int>(cfg.get_int_or("eval", "packet", 0));
  if (with_models) {
    const int model_packet = models.front()->packet;
    require_config(packet == 0 || packet == model_packet,
                   "[eval] packet conflicts with the checkpoint packet " +
                       std::to_string(model_packet));
    packet = model_packet;
  }
  const bool smoothed = cfg.get_bool_or("estimate", "smoothed", true);
  const int axial_taps = static_cast<int>(cfg.get_int_or("estimate", "axial_taps", 10));
  const int lateral_taps = static_cast<int>(cfg.get_int_or("estimate", "lateral_taps", 4));
  const std::vector<int> folds = cfg.get_int_list("eval", "folds");

  const auto manifest = augment::read_manifest(data_dir / "manifest.json");
  fs::create_directories(out_dir);

  struct Pool {
    double sq = 0.0;
    long n = 0;
    void add(double rmse_value, long count) {
      if (count > 0) {
        sq += rmse_value * rmse_value * static_cast<double>(count);
        n += count;
      }
    }
    double rmse() const {
      return n > 0 ? std::sqrt(sq / static_cast<double>(n))
                   : std::numeric_limits<double>::quiet_NaN();
    }
  };
  Pool ref_all, ref_free, ref_alias, net_all, net_free, net_alias;

  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<double, std::vector<std::string>>> speed_rows;
  long used = 0;
  for (const auto& entry : manifest.entries) {
    if (!in_folds(folds, entry.fold)) continue;
    const DopplerSample sample = read_bundle(data_dir / entry.path);
    const IQEnsemble iq = reduced(sample.iq, packet, entry.path);
    const VelocityMap ref = estimate::doppler_velocity_map(iq, smoothed, axial_taps, lateral_taps);
    const VelocityMetrics mr =
        velocity_metrics(sample.truth.values, sample.mask, ref.values, ref.nyquist_mps);
    ref_all.add(mr.rmse, mr.mask_px);
    ref_free.add(mr.rmse_alias_free, mr.mask_px - mr.aliased_px);
    ref_alias.add(mr.rmse_aliased, mr.aliased_px);

    std::vector<std::string> row = {
        entry.path, format_number(mr.speed_mps), format_number(ref.nyquist_mps),
        std::to_string(mr.mask_px), std::to_string(mr.aliased_px), format_number(mr.rmse),
        format_number(mr.rmse_alias_free), format_number(mr.rmse_aliased)};
    std::vector<std::string> speed_row = {format_number(mr.speed_mps), format_number(mr.rmse)};

    if (with_models) {
      const nn::TrainingItem item = nn::make_training_item(sample, packet);
      const RealField phase = nn::ensemble_phase(ensemble, item);
      const RealField v_net = phase_to_velocity(phase, item.nyquist_mps);
      const VelocityMetrics mn =
          velocity_metrics(sample.truth.values, sample.mask, v_net, item.nyquist_mps);
      const double rmsd = nn::masked_rmse(v_net, ref.values, sample.mask);
      net_all.add(mn.rmse, mn.mask_px);
      net_free.add(mn.rmse_alias_free, mn.mask_px - mn.aliased_px);
      net_alias.add(mn.rmse_aliased, mn.aliased_px);
      row.push_back(format_number(mn.rmse));
      row.push_back(format_number(mn.rmse_alias_free));
      row.push_back(format_number(mn.rmse_aliased));
      row.push_back(format_number(rmsd));
      speed_row.push_back(format_number(mn.rmse));
    }
    rows.push_back(std::move(row));
    speed_rows.emplace_back(mr.speed_mps, std::move(speed_row));
    ++used;
  }
  require_data(used > 0, "eval: no samples selected");

  std::vector<std::string> header = {"name",          "speed_mps",          "nyquist_mps",
                                     "mask_pixels",   "aliased_pixels",     "autocorr_rmse_mps",
                                     "autocorr_alias_free_mps", "autocorr_aliased_mps"};
  std::vector<std::string> speed_header = {"speed_mps", "autocorr_rmse_mps"};
  if (with_models) {
    header.insert(header.end(), {"model_rmse_mps", "model_alias_free_mps", "model_aliased_mps",
                                 "model_vs_autocorr_rmsd_mps"});
    speed_header.push_back("model_rmse_mps");
  }
  write_csv(out_dir / "metrics.csv", header, rows);

  std::stable_sort(speed_rows.begin(), speed_rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<std::string>> sorted_rows;
  for (auto& [speed, row] : speed_rows) sorted_rows.push_back(std::move(row));
  write_csv(out_dir / "rmse_vs_speed.csv", speed_header, sorted_rows);

  std::vector<std::vector<std::string>> summary;
  const auto summary_row = [&](const char* subset, const Pool& ref_pool, const Pool& net_pool) {
    std::vector<std::string> r = {subset, std::to_string(ref_pool.n),
                                  format_number(ref_pool.rmse())};
    if (with_models) r.push_back(format_number(net_pool.rmse()));
    summary.push_back(std::move(r));
  };
  summary_row("all", ref_all, net_all);
  summary_row("alias_free", ref_free, net_free);
  summary_row("aliased", ref_alias, net_alias);
  std::vector<std::string> summary_header = {"subset", "pixels", "autocorr_rmse_mps"};
  if (with_models) summary_header.push_back("model_rmse_mps");
  write_csv(out_dir / "summary.csv", summary_header, summary);

  std::cout << "eval: " << used << " samples, autocorr rmse " << ref_all.rmse() << " m/s";
  if (with_models) std::cout << ", model rmse " << net_all.rmse() << " m/s";
  std::cout << "\n";
  if (ref_alias.n > 0) {
    std::cout << "eval: aliased pixels " << ref_alias.n << ", autocorr " << ref_alias.rmse();
    if (with_models)
      std::cout << " vs model " << net_alias.rmse() << " (ratio "
                << net_alias.rmse() / ref_alias.rmse() << ")";
    std::cout << " m/s\n";
  }
}

void cmd_render(const fs::path& vmap_file, const fs::path& ppm_file) {
  const VelocityMap map = read_velocity_map(vmap_file);
  write_velocity_ppm(ppm_file, map);
  std::cout << "render: " << vmap_file.string() << " -> " << ppm_file.string() << " ("
            << map.values.cols() << "x" << map.values.rows() << ")\n";
}

namespace {

// Loss of the full architecture at the current parameters with the given
// input, evaluated without building a tape.
double gradcheck_loss(nn::Model<double>& model, const nn::Tensor<double>& x,
                      const nn::Tensor<double>& target, const nn::Tensor<double>& weight) {
  nn::NoGradGuard guard;
  nn::Var<double> input(x);
  return nn::masked_mse(model.forward(input, true), target, weight).value().data[0];
}

}  // namespace

void cmd_gradcheck(const std::string& arch) {
  const std::vector<std::string> archs =
      arch.empty() ? nn::model_archs() : std::vector<std::string>{arch};
  constexpr double kTol = 1e-4;
  constexpr Eigen::Index kH = 16, kW = 8;
  bool all_ok = true;

  for (const std::string& a : archs) {
    auto model = nn::make_model<double>(a, 2, 7);

    Rng rng(derive_seed(99, "gradcheck:" + a));
    nn::Tensor<double> x(1, 4, kH, kW);
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    nn::Tensor<double> target(1, 1, kH, kW);
    for (auto& v : target.data) v = rng.uniform(-kPi, kPi);
    const nn::Tensor<double> weight = nn::Tensor<double>::full(1, 1, kH, kW, 1.0);

    nn::Var<double> input(x, true);
    auto loss = nn::masked_mse(model->forward(input, true), target, weight);
    nn::backward(loss);

    const auto params = nn::trainable_parameters(*model);
    require_data(!params.empty(), "gradcheck: model has no parameters");

    // Probed coordinates: a few input pixels plus entries of the first,
    // middle and last parameter tensors, covering encoder, bottleneck and
    // head weights.
    struct Probe {
      nn::Tensor<double>* values;
      const nn::Tensor<double>* grads;
      Eigen::Index index;
    };
    std::vector<Probe> probes;
    for (int k = 0; k < 4; ++k)
      probes.push_back({&input.value(), &input.grad(),
                        static_cast<Eigen::Index>(rng.below(
                            static_cast<std::uint64_t>(input.value().size())))});
    for (const std::size_t pi :
         {std::size_t{0}, params.size() / 2, params.size() - 1}) {
      nn::Var<double>* p = params[pi];
      for (int k = 0; k < 2; ++k)
        probes.push_back({&p->value(), &p->grad(),
                          static_cast<Eigen::Index>(
                              rng.below(static_cast<std::uint64_t>(p->value().size())))});
    }

    double max_err = 0.0;
    for (const Probe& probe : probes) {
      double& coord = probe.values->data[probe.index];
      const double saved = coord;
      // Small enough that a rectifier kink crossed by the stencil
      // contributes O(h) well below tolerance; loss magnitudes keep the
      // cancellation error near 1e-9.
      const double h = 1e-6 * std::max(1.0, std::abs(saved));
      coord = saved + h;
      const double up = gradcheck_loss(*model, input.value(), target, weight);
      coord = saved - h;
      const double down = gradcheck_loss(*model, input.value(), target, weight);
      coord = saved;

      const double fd = (up - down) / (2.0 * h);
      const double an = probe.grads->data[probe.index];
      const double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
      max_err = std::max(max_err, err);
    }

    const bool ok = max_err < kTol;
    all_ok = all_ok && ok;
    std::cout << "gradcheck: " << a << " max relative error " << max_err << " "
              << (ok ? "PASS" : "FAIL") << "\n";
  }
  if (!all_ok) throw NumericError("gradcheck: analytic and finite-difference gradients differ");
}

}  // namespace doppler::cli
