#pragma once

#include <filesystem>
#include <string>

#include "doppler/cli/config.hpp"

namespace doppler::cli {

// One function per CLI verb. All of them throw ConfigError / DataError /
// NumericError on failure; main translates those into exit codes. Every
// command is deterministic given its config and seed: rerunning writes
// byte-identical outputs.

// Simulates a batch of scenes into out_dir, one bundle per sample plus a
// manifest listing them.
void cmd_simulate(const Config& cfg, const std::filesystem::path& out_dir);

// Expands a simulated dataset with mirrored, zoomed and PRF-reduced
// variants, screens weak-signal samples, assigns cross-validation folds.
void cmd_augment(const Config& cfg, const std::filesystem::path& in_dir,
                 const std::filesystem::path& out_dir);

// Applies SVD clutter rejection and slow-time subsampling to every bundle.
void cmd_filter(const Config& cfg, const std::filesystem::path& in_dir,
                const std::filesystem::path& out_dir);

// Baseline velocity estimation: writes one velocity map per sample plus
// accuracy metrics against the simulated truth.
void cmd_estimate(const Config& cfg, const std::filesystem::path& in_dir,
                  const std::filesystem::path& out_dir);

// Trains one network per requested fold; writes checkpoints and loss logs.
void cmd_train(const Config& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir);

// Runs a fold ensemble over a dataset, writing the median velocity map per
// sample.
void cmd_infer(const Config& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& models_dir, const std::filesystem::path& out_dir);

// Compares the autocorrelation baseline (and optionally a model ensemble)
// against truth: per-sample metrics, pooled summary, error-versus-speed
// curve. models_dir may be empty for a baseline-only report.
void cmd_eval(const Config& cfg, const std::filesystem::path& data_dir,
              const std::filesystem::path& models_dir, const std::filesystem::path& out_dir);

// Velocity map file to color image.
void cmd_render(const std::filesystem::path& vmap_file, const std::filesystem::path& ppm_file);

// Finite-difference gradient verification of the requested architecture
// (empty = all) in 64-bit; throws NumericError when any check exceeds the
// tolerance.
void cmd_gradcheck(const std::string& arch);

}  // namespace doppler::cli
