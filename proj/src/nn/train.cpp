#include "doppler/nn/train.hpp"

#include <algorithm>
#include <cmath>

#include "doppler/augment/augment.hpp"
#include "doppler/augment/manifest.hpp"
#include "doppler/core/bundle.hpp"
#include "doppler/estimate/autocorrelation.hpp"
#include "doppler/nn/ops.hpp"
#include "doppler/rng.hpp"

namespace doppler::nn {

namespace {

// Stacks items into one batch; every item must share the grid.
void fill_batch(const std::vector<const TrainingItem*>& items,
                const std::vector<std::size_t>& order, std::size_t first, std::size_t count,
                Tensor<float>& x, Tensor<float>& y, Tensor<float>& w) {
  const auto& proto = *items[order[first]];
  const Eigen::Index c = proto.input.c(), h = proto.input.h(), wd = proto.input.w();
  x = Tensor<float>(static_cast<Eigen::Index>(count), c, h, wd);
  y = Tensor<float>(static_cast<Eigen::Index>(count), 1, h, wd);
  w = Tensor<float>(static_cast<Eigen::Index>(count), 1, h, wd);
  for (std::size_t b = 0; b < count; ++b) {
    const auto& item = *items[order[first + b]];
    require_data(item.input.c() == c && item.input.h() == h && item.input.w() == wd,
                 "training: all items in a batch must share the grid");
    std::copy(item.input.data.begin(), item.input.data.end(),
              x.data.begin() + static_cast<std::ptrdiff_t>(b * item.input.data.size()));
    std::copy(item.target.data.begin(), item.target.data.end(),
              y.data.begin() + static_cast<std::ptrdiff_t>(b * item.target.data.size()));
    std::copy(item.weight.data.begin(), item.weight.data.end(),
              w.data.begin() + static_cast<std::ptrdiff_t>(b * item.weight.data.size()));
  }
}

double weight_sum(const Tensor<float>& w) {
  double acc = 0.0;
  for (float v : w.data) acc += v;
  return acc;
}

// Weighted mean of per-batch losses, each loss already normalized by its
// own weight sum, recombined into the overall per-pixel mean.
struct LossAccum {
  double num = 0.0, den = 0.0;
  void add(double loss, double wsum) {
    num += loss * wsum;
    den += wsum;
  }
  double mean() const { return den > 0.0 ? num / den : 0.0; }
};

double run_validation(Model<float>& model, const std::vector<const TrainingItem*>& val,
                      int batch) {
  NoGradGuard guard;
  std::vector<std::size_t> order(val.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  LossAccum acc;
  for (std::size_t first = 0; first < val.size(); first += static_cast<std::size_t>(batch)) {
    const std::size_t count = std::min(static_cast<std::size_t>(batch), val.size() - first);
    Tensor<float> x, y, w;
    fill_batch(val, order, first, count, x, y, w);
    const double wsum = weight_sum(w);
    const auto loss = masked_mse(model.forward(Var<float>(std::move(x)), false), y, w);
    acc.add(static_cast<double>(loss.value().data[0]), wsum);
  }
  return acc.mean();
}

}  // namespace

TrainingItem make_training_item(const DopplerSample& sample, int packet) {
  require_config(packet >= 2, "training: packet must be at least 2");
  DopplerSample s = sample;
  s.iq = estimate::reduce_packet(sample.iq, 0, packet);
  augment::normalize_sample(s);

  const int h = s.iq.geometry.height, w = s.iq.geometry.width;
  TrainingItem item;
  item.input = Tensor<float>(1, 2 * packet, h, w);
  for (int k = 0; k < packet; ++k)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        item.input.at(0, k, i, j) = static_cast<float>(s.iq.frames[k](i, j).real());
        item.input.at(0, packet + k, i, j) = static_cast<float>(s.iq.frames[k](i, j).imag());
      }

  item.nyquist_mps = nyquist_velocity(s.iq.params);
  item.target = Tensor<float>(1, 1, h, w);
  item.weight = Tensor<float>(1, 1, h, w);
  const RealField phase = velocity_to_phase(s.truth.values, item.nyquist_mps);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      item.target.at(0, 0, i, j) = static_cast<float>(phase(i, j));
      item.weight.at(0, 0, i, j) = s.mask(i, j) ? 1.0f : 0.0f;
    }

  item.sequence_id = s.sequence_id;
  item.tags = s.tags;
  return item;
}

LoadedDataset load_dataset(const std::filesystem::path& manifest_file, int packet) {
  const auto manifest = augment::read_manifest(manifest_file);
  const auto base = manifest_file.parent_path();
  LoadedDataset data;
  data.fold_count = manifest.fold_count;
  data.packet = packet;
  data.items.reserve(manifest.entries.size());
  for (const auto& entry : manifest.entries) {
    const auto sample = read_bundle(base / entry.path);
    auto item = make_training_item(sample, packet);
    item.fold = entry.fold;
    data.items.push_back(std::move(item));
  }
  return data;
}

std::pair<std::vector<const TrainingItem*>, std::vector<const TrainingItem*>> train_val_split(
    const LoadedDataset& data, int holdout_fold) {
  std::pair<std::vector<const TrainingItem*>, std::vector<const TrainingItem*>> out;
  for (const auto& item : data.items)
    (item.fold == holdout_fold ? out.second : out.first).push_back(&item);
  return out;
}

std::vector<EpochStats> train_model(Model<float>& model,
                                    const std::vector<const TrainingItem*>& train,
                                    const std::vector<const TrainingItem*>& val,
                                    const TrainConfig& cfg,
                                    const std::function<void(const EpochStats&)>& on_epoch) {
  require_config(!train.empty(), "training: no training items");
  require_config(cfg.batch >= 1, "training: batch must be positive");

  AdamW<float> opt(trainable_parameters(model),
                   {cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  PlateauScheduler sched(cfg.plateau);
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle:" + model.arch()));

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochStats> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    LossAccum acc;
    for (std::size_t first = 0; first < train.size();
         first += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t count =
          std::min(static_cast<std::size_t>(cfg.batch), train.size() - first);
      Tensor<float> x, y, w;
      fill_batch(train, order, first, count, x, y, w);
      const double wsum = weight_sum(w);
      opt.zero_grad();
      const auto loss = masked_mse(model.forward(Var<float>(std::move(x)), true), y, w);
      backward(loss);
      opt.step();
      acc.add(static_cast<double>(loss.value().data[0]), wsum);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = opt.learning_rate();
    stats.train_loss = acc.mean();
    stats.val_loss = val.empty() ? stats.train_loss : run_validation(model, val, cfg.batch);
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    opt.set_learning_rate(sched.step(stats.val_loss, opt.learning_rate()));
    if (cfg.stop_train_loss > 0.0 && stats.train_loss < cfg.stop_train_loss) break;
  }
  return history;
}

std::vector<FoldResult> train_kfold(const LoadedDataset& data, const TrainConfig& cfg,
                                    const std::vector<int>& folds,
                                    const std::function<void(const EpochStats&)>& on_epoch) {
  std::vector<FoldResult> results;
  results.reserve(folds.size());
  for (const int fold : folds) {
    require_config(fold >= 0 && fold < data.fold_count, "training: fold out of range");
    const auto [train, val] = train_val_split(data, fold);
    FoldResult r;
    r.fold = fold;
    r.model = make_model<float>(cfg.arch, cfg.packet,
                                derive_seed(cfg.seed, "fold:" + std::to_string(fold)));
    r.stats = train_model(*r.model, train, val, cfg, on_epoch);
    results.push_back(std::move(r));
  }
  return results;
}

RealField predict_phase(Model<float>& model, const TrainingItem& item) {
  NoGradGuard guard;
  const auto out = model.forward(Var<float>(item.input), false);
  RealField phase(out.value().h(), out.value().w());
  for (Eigen::Index i = 0; i < phase.rows(); ++i)
    for (Eigen::Index j = 0; j < phase.cols(); ++j)
      phase(i, j) = static_cast<double>(out.value().at(0, 0, i, j));
  return phase;
}

RealField ensemble_phase(const std::vector<Model<float>*>& models, const TrainingItem& item) {
  require_config(!models.empty(), "ensemble: no models");
  std::vector<RealField> preds;
  preds.reserve(models.size());
  for (auto* m : models) preds.push_back(predict_phase(*m, item));
  RealField out(preds[0].rows(), preds[0].cols());
  std::vector<double> vals(models.size());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      for (std::size_t k = 0; k < preds.size(); ++k) vals[k] = preds[k](i, j);
      std::sort(vals.begin(), vals.end());
      const std::size_t mid = vals.size() / 2;
      out(i, j) = vals.size() % 2 ? vals[mid] : 0.5 * (vals[mid - 1] + vals[mid]);
    }
  return out;
}

double masked_rmse(const RealField& a, const RealField& b, const MaskField& mask) {
  require_data(a.rows() == b.rows() && a.cols() == b.cols() && a.rows() == mask.rows() &&
                   a.cols() == mask.cols(),
               "rmse: shape mismatch");
  double acc = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (mask(i, j)) {
        const double d = a(i, j) - b(i, j);
        acc += d * d;
        ++count;
      }
  require_data(count > 0, "rmse: empty mask");
  return std::sqrt(acc / static_cast<double>(count));
}

}  // namespace doppler::nn
