#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "doppler/nn/graph.hpp"

namespace doppler::nn {

// Adam with decoupled weight decay: the decay shrinks the weights directly
// and never enters the moment estimates, so a parameter with zero gradient
// still decays toward zero.
template <typename T>
class AdamW {
 public:
  struct Hyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-2;
  };

  AdamW(std::vector<Var<T>*> params, Hyper hp) : params_(std::move(params)), hp_(hp) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto* p : params_) {
      const auto& s = p->value().shape;
      m_.emplace_back(Tensor<T>(s[0], s[1], s[2], s[3]));
      v_.emplace_back(Tensor<T>(s[0], s[1], s[2], s[3]));
    }
  }

  double learning_rate() const { return hp_.lr; }
  void set_learning_rate(double lr) { hp_.lr = lr; }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(hp_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(hp_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& w = params_[i]->value();
      const auto& g = params_[i]->grad();
      auto& m = m_[i];
      auto& v = v_[i];
      const bool has_grad = g.size() == w.size();
      for (Eigen::Index k = 0; k < w.size(); ++k) {
        const double gk = has_grad ? static_cast<double>(g.data[k]) : 0.0;
        double mk = hp_.beta1 * static_cast<double>(m.data[k]) + (1.0 - hp_.beta1) * gk;
        double vk = hp_.beta2 * static_cast<double>(v.data[k]) + (1.0 - hp_.beta2) * gk * gk;
        m.data[k] = static_cast<T>(mk);
        v.data[k] = static_cast<T>(vk);
        double wk = static_cast<double>(w.data[k]) * (1.0 - hp_.lr * hp_.weight_decay);
        wk -= hp_.lr * (mk / bc1) / (std::sqrt(vk / bc2) + hp_.eps);
        w.data[k] = static_cast<T>(wk);
      }
    }
  }

 private:
  std::vector<Var<T>*> params_;
  Hyper hp_;
  std::vector<Tensor<T>> m_, v_;
  long long t_ = 0;
};

// Cuts the learning rate by `factor` once the watched metric has gone
// `patience` consecutive epochs without a relative improvement of at least
// `rel_threshold`, never below `min_lr`.
class PlateauScheduler {
 public:
  struct Config {
    double factor = 0.1;
    int patience = 10;
    double rel_threshold = 1e-4;
    double min_lr = 1e-6;
  };

  explicit PlateauScheduler(Config cfg) : cfg_(cfg) {}

  double step(double metric, double lr) {
    if (metric < best_ * (1.0 - cfg_.rel_threshold)) {
      best_ = metric;
      bad_ = 0;
      return lr;
    }
    if (++bad_ > cfg_.patience) {
      bad_ = 0;
      lr = std::max(lr * cfg_.factor, cfg_.min_lr);
    }
    return lr;
  }

  double best() const { return best_; }

 private:
  Config cfg_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
};

}  // namespace doppler::nn
