// Command-line front end for the color Doppler toolkit: simulate phantom
// ensembles, augment datasets, filter clutter, estimate velocity, train and
// run the networks, evaluate against truth, render maps.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
// error, 1 anything else.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "doppler/cli/commands.hpp"
#include "doppler/cli/config.hpp"

namespace {

doppler::cli::Config load_config(const std::string& path,
                                 const std::vector<std::string>& overrides) {
  doppler::cli::Config cfg =
      path.empty() ? doppler::cli::Config{} : doppler::cli::Config::from_file(path);
  for (const std::string& assignment : overrides) cfg.set_override(assignment);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale color Doppler toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string in_dir, out_dir, data_dir, models_dir, arch;

  const auto add_config = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("-c,--config", config_path, "configuration file");
    if (required) opt->required();
    cmd->add_option("--set", overrides, "override a config value as section.key=value");
  };

  auto* sim = app.add_subcommand("simulate", "simulate scenes into a dataset directory");
  add_config(sim, true);
  sim->add_option("-o,--out", out_dir, "output dataset directory")->required();

  auto* aug = app.add_subcommand("augment", "expand a dataset with variants and assign folds");
  add_config(aug, false);
  aug->add_option("-i,--in", in_dir, "input dataset directory")->required();
  aug->add_option("-o,--out", out_dir, "output dataset directory")->required();

  auto* fil = app.add_subcommand("filter", "clutter-filter and subsample every bundle");
  add_config(fil, false);
  fil->add_option("-i,--in", in_dir, "input dataset directory")->required();
  fil->add_option("-o,--out", out_dir, "output dataset directory")->required();

  auto* est = app.add_subcommand("estimate", "autocorrelation velocity maps and metrics");
  add_config(est, false);
  est->add_option("-i,--in", in_dir, "dataset directory or single bundle")->required();
  est->add_option("-o,--out", out_dir, "output directory")->required();

  auto* trn = app.add_subcommand("train", "train networks on a dataset");
  add_config(trn, false);
  trn->add_option("-d,--data", data_dir, "dataset directory")->required();
  trn->add_option("-o,--out", out_dir, "output directory for checkpoints and logs")->required();

  auto* inf = app.add_subcommand("infer", "ensemble velocity maps for a dataset");
  add_config(inf, false);
  inf->add_option("-d,--data", data_dir, "dataset directory")->required();
  inf->add_option("-m,--models", models_dir, "directory of fold checkpoints")->required();
  inf->add_option("-o,--out", out_dir, "output directory")->required();

  auto* evl = app.add_subcommand("eval", "compare estimators against simulated truth");
  add_config(evl, false);
  evl->add_option("-d,--data", data_dir, "dataset directory")->required();
  evl->add_option("-m,--models", models_dir, "directory of fold checkpoints (optional)");
  evl->add_option("-o,--out", out_dir, "output directory")->required();

  auto* ren = app.add_subcommand("render", "velocity map file to PPM image");
  ren->add_option("-i,--in", in_dir, "velocity map file")->required();
  ren->add_option("-o,--out", out_dir, "output PPM file")->required();

  auto* grd = app.add_subcommand("gradcheck", "verify gradients in 64-bit");
  grd->add_option("-a,--arch", arch, "architecture to check (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const doppler::cli::Config cfg = load_config(config_path, overrides);
    if (sim->parsed()) doppler::cli::cmd_simulate(cfg, out_dir);
    if (aug->parsed()) doppler::cli::cmd_augment(cfg, in_dir, out_dir);
    if (fil->parsed()) doppler::cli::cmd_filter(cfg, in_dir, out_dir);
    if (est->parsed()) doppler::cli::cmd_estimate(cfg, in_dir, out_dir);
    if (trn->parsed()) doppler::cli::cmd_train(cfg, data_dir, out_dir);
    if (inf->parsed()) doppler::cli::cmd_infer(cfg, data_dir, models_dir, out_dir);
    if (evl->parsed()) doppler::cli::cmd_eval(cfg, data_dir, models_dir, out_dir);
    if (ren->parsed()) doppler::cli::cmd_render(in_dir, out_dir);
    if (grd->parsed()) doppler::cli::cmd_gradcheck(arch);
  } catch (const doppler::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const doppler::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const doppler::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
