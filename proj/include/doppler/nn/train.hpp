#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "doppler/core/sample.hpp"
#include "doppler/nn/models.hpp"
#include "doppler/nn/optim.hpp"

namespace doppler::nn {

// One loaded item on a fixed grid. The input packs the first `packet`
// slow-time frames as planar channels (all real parts, then all imaginary
// parts), scaled so the largest modulus in the item is 1. The target is the
// lag-one phase the truth velocity would produce, left unwrapped, so
// aliased pixels carry targets beyond +-pi and the net can learn to undo
// the wrap. The weight is the region-of-interest mask.
struct TrainingItem {
  Tensor<float> input;
  Tensor<float> target;
  Tensor<float> weight;
  std::string sequence_id;
  std::set<Tag> tags;
  int fold = -1;
  double nyquist_mps = 0.0;
};

TrainingItem make_training_item(const DopplerSample& sample, int packet);

struct LoadedDataset {
  std::vector<TrainingItem> items;
  int fold_count = 0;
  int packet = 0;
};

// Reads every bundle listed in the manifest, reduced to `packet` frames.
LoadedDataset load_dataset(const std::filesystem::path& manifest_file, int packet);

// train = items outside `holdout_fold`, val = items inside it
std::pair<std::vector<const TrainingItem*>, std::vector<const TrainingItem*>> train_val_split(
    const LoadedDataset& data, int holdout_fold);

struct TrainConfig {
  std::string arch = "real_unet";
  int packet = 2;
  int batch = 16;
  int epochs = 200;
  double lr = 1e-3;
  double weight_decay = 1e-2;
  PlateauScheduler::Config plateau{};
  std::uint64_t seed = 1234;
  double stop_train_loss = 0.0;  // early exit threshold; 0 disables
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

// Minimizes masked mse of the phase map with decoupled weight decay and a
// plateau learning-rate schedule watching the validation loss (the train
// loss when no validation items are given). Returns per-epoch stats.
std::vector<EpochStats> train_model(Model<float>& model,
                                    const std::vector<const TrainingItem*>& train,
                                    const std::vector<const TrainingItem*>& val,
                                    const TrainConfig& cfg,
                                    const std::function<void(const EpochStats&)>& on_epoch = {});

struct FoldResult {
  int fold = -1;
  std::unique_ptr<Model<float>> model;
  std::vector<EpochStats> stats;
};

// One model per requested fold, each trained with that fold held out.
std::vector<FoldResult> train_kfold(const LoadedDataset& data, const TrainConfig& cfg,
                                    const std::vector<int>& folds,
                                    const std::function<void(const EpochStats&)>& on_epoch = {});

// Eval-mode phase prediction for one item.
RealField predict_phase(Model<float>& model, const TrainingItem& item);

// Per-pixel median of the predictions of several models.
RealField ensemble_phase(const std::vector<Model<float>*>& models, const TrainingItem& item);

double masked_rmse(const RealField& a, const RealField& b, const MaskField& mask);

}  // namespace doppler::nn
