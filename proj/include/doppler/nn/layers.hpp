#pragma once

#include <memory>
#include <string>
#include <vector>

#include "doppler/nn/conv.hpp"
#include "doppler/nn/ops.hpp"
#include "doppler/rng.hpp"

namespace doppler::nn {

// Flat registry of a model's state, in construction order. The order is the
// canonical checkpoint layout. Parameter tensors named with an "_im" suffix
// are the imaginary halves of complex pairs; counting helpers treat each
// pair as one logical parameter.
template <typename T>
struct ParamCollector {
  std::vector<std::pair<std::string, Var<T>*>> params;
  std::vector<std::pair<std::string, Tensor<T>*>> buffers;

  void param(const std::string& name, Var<T>& v) { params.emplace_back(name, &v); }
  void buffer(const std::string& name, Tensor<T>& t) { buffers.emplace_back(name, &t); }
};

template <typename T>
void xavier_uniform(Tensor<T>& t, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng,
                    double gain = 1.0) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
struct Conv2d {
  Var<T> weight, bias;
  ConvSpec sp;

  Conv2d() = default;
  Conv2d(Eigen::Index in_c, Eigen::Index out_c, Eigen::Index kh, Eigen::Index kw, ConvSpec spec,
         Rng& rng, double gain = 1.0)
      : sp(spec) {
    Tensor<T> w(out_c, in_c / spec.groups, kh, kw);
    xavier_uniform(w, (in_c / spec.groups) * kh * kw, out_c * kh * kw, rng, gain);
    weight = Var<T>(std::move(w), true);
    bias = Var<T>(Tensor<T>::zeros(1, out_c, 1, 1), true);
  }

  Var<T> forward(const Var<T>& x) const { return conv2d(x, weight, bias, sp); }
  void collect(const std::string& p, ParamCollector<T>& pc) {
    pc.param(p + ".w", weight);
    pc.param(p + ".b", bias);
  }
};

template <typename T>
struct ConvTranspose2d {
  Var<T> weight, bias;
  ConvSpec sp;

  ConvTranspose2d() = default;
  ConvTranspose2d(Eigen::Index in_c, Eigen::Index out_c, Eigen::Index kh, Eigen::Index kw,
                  ConvSpec spec, Rng& rng, double gain = 1.0)
      : sp(spec) {
    Tensor<T> w(in_c, out_c / spec.groups, kh, kw);
    xavier_uniform(w, (out_c / spec.groups) * kh * kw, in_c * kh * kw, rng, gain);
    weight = Var<T>(std::move(w), true);
    bias = Var<T>(Tensor<T>::zeros(1, out_c, 1, 1), true);
  }

  Var<T> forward(const Var<T>& x) const { return conv_transpose2d(x, weight, bias, sp); }
  void collect(const std::string& p, ParamCollector<T>& pc) {
    pc.param(p + ".w", weight);
    pc.param(p + ".b", bias);
  }
};

template <typename T>
struct BatchNorm2d {
  Var<T> gamma, beta;
  Tensor<T> running_mean, running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  BatchNorm2d() = default;
  explicit BatchNorm2d(Eigen::Index c)
      : gamma(Tensor<T>::full(1, c, 1, 1, T(1)), true),
        beta(Tensor<T>::zeros(1, c, 1, 1), true),
        running_mean(Tensor<T>::zeros(1, c, 1, 1)),
        running_var(Tensor<T>::full(1, c, 1, 1, T(1))) {}

  Var<T> forward(const Var<T>& x, bool train) {
    if (train) {
      const auto mu = reduce_mean(x, true, false, true, true);
      const auto xc = sub(x, mu);
      const auto var = reduce_mean(mul(xc, xc), true, false, true, true);
      const auto count = static_cast<T>(x.value().n() * x.value().h() * x.value().w());
      for (Eigen::Index c = 0; c < running_mean.c(); ++c) {
        running_mean.data[c] = (T(1) - momentum) * running_mean.data[c] + momentum * mu.value().data[c];
        const T unbiased = var.value().data[c] * count / (count - T(1));
        running_var.data[c] = (T(1) - momentum) * running_var.data[c] + momentum * unbiased;
      }
      const auto norm = div(xc, sqrt_op(offset(var, eps)));
      return add(mul(norm, gamma), beta);
    }
    const auto xc = sub(x, constant(running_mean));
    auto denom = running_var;
    for (auto& v : denom.data) v = std::sqrt(v + eps);
    return add(mul(div(xc, constant(std::move(denom))), gamma), beta);
  }

  void collect(const std::string& p, ParamCollector<T>& pc) {
    pc.param(p + ".gamma", gamma);
    pc.param(p + ".beta", beta);
    pc.buffer(p + ".running_mean", running_mean);
    pc.buffer(p + ".running_var", running_var);
  }
};

// Normalization over the channel axis at every spatial position.
template <typename T>
struct LayerNorm {
  Var<T> gamma, beta;
  T eps = T(1e-6);

  LayerNorm() = default;
  explicit LayerNorm(Eigen::Index c)
      : gamma(Tensor<T>::full(1, c, 1, 1, T(1)), true),
        beta(Tensor<T>::zeros(1, c, 1, 1), true) {}

  Var<T> forward(const Var<T>& x) const {
    const auto mu = reduce_mean(x, false, true, false, false);
    const auto xc = sub(x, mu);
    const auto var = reduce_mean(mul(xc, xc), false, true, false, false);
    return add(mul(div(xc, sqrt_op(offset(var, eps))), gamma), beta);
  }

  void collect(const std::string& p, ParamCollector<T>& pc) {
    pc.param(p + ".gamma", gamma);
    pc.param(p + ".beta", beta);
  }
};

// ---- complex layers ----
//
// Complex feature maps ride in planar real tensors: channels [0, C) hold the
// real parts, channels [C, 2C) the imaginary parts.

template <typename T>
Var<T> complex_concat(const Var<T>& a, const Var<T>& b) {
  const Eigen::Index ca = a.value().c() / 2, cb = b.value().c() / 2;
  const auto re = concat_channels(slice_channels(a, 0, ca), slice_channels(b, 0, cb));
  const auto im =
      concat_channels(slice_channels(a, ca, 2 * ca), slice_channels(b, cb, 2 * cb));
  return concat_channels(re, im);
}

template <typename T>
struct ComplexConv2d {
  Var<T> w_re, w_im, b_re, b_im;
  ConvSpec sp;

  ComplexConv2d() = default;
  ComplexConv2d(Eigen::Index in_c, Eigen::Index out_c, Eigen::Index kh, Eigen::Index kw,
                ConvSpec spec, Rng& rng)
      : sp(spec) {
    const double gain = 1.0 / std::sqrt(2.0);  // split the variance over the pair
    Tensor<T> wr(out_c, in_c, kh, kw), wi(out_c, in_c, kh, kw);
    xavier_uniform(wr, in_c * kh * kw, out_c * kh * kw, rng, gain);
    xavier_uniform(wi, in_c * kh * kw, out_c * kh * kw, rng, gain);
    w_re = Var<T>(std::move(wr), true);
    w_im = Var<T>(std::move(wi), true);
    b_re = Var<T>(Tensor<T>::zeros(1, out_c, 1, 1), true);
    b_im = Var<T>(Tensor<T>::zeros(1, out_c, 1, 1), true);
  }

  Var<T> forward(const Var<T>& x) const {
    const Eigen::Index c = x.value().c() / 2;
    const auto xr = slice_channels(x, 0, c);
    const auto xi = slice_channels(x, c, 2 * c);
    const auto zero = constant(Tensor<T>::zeros(1, w_re.value().n(), 1, 1));
    const auto yr = sub(conv2d(xr, w_re, b_re, sp), conv2d(xi, w_im, zero, sp));
    const auto yi = add(conv2d(xr, w_im, b_im, sp), conv2d(xi, w_re, zero, sp));
    return concat_channels(yr, yi);
  }

  void collect(const std::string& p, ParamCollector<T>& pc) {
    pc.param(p + ".w_re", w_re);
    pc.param(p + ".w_im", w_im);
    pc.param(p + ".b_re", b_re);
    pc.param(p + ".b_im", b_im);
  }
};

template <typename T>
struct ComplexConvTranspose2d {
  Var<T> w_re, w_im, b_re, b_im;
  ConvSpec sp;

  ComplexConvTranspose2d() = default;
  ComplexConvTranspose2d(Eigen::Index in_c, Eigen::Index out_c, Eigen::Index kh, Eigen::Index kw,
                         ConvSpec spec, Rng& rng)
      : sp(spec) {
    const double gain = 1.0 / std::sqrt(2.0);
    Tensor<T> wr(in_c, out_c, kh, kw), wi(in_c, out_c, kh, kw);
    xavier_uniform(wr, out_c * kh * kw, in_c * kh * kw, rng, gain);
    xavier_uniform(wi, out_c * kh * kw, in_c * kh * kw, rng, gain);
    w_re = Var<T>(std::move(wr), true);
    w_im = Var<T>(std::move(wi), true);
    b_re = Var<T>(Tensor<T>::zeros(1, out_c, 1, 1), true);
    b_im = Var<T>(Tensor<T>::zeros(1, out_c, 1, 1), true);
  }

  Var<T> forward(const Var<T>& x) const {
    const Eigen::Index c = x.value().c() / 2;
    const auto xr = slice_channels(x, 0, c);
    const auto xi = slice_channels(x, c, 2 * c);
    const auto zero = constant(Tensor<T>::zeros(1, w_re.value().c(), 1, 1));
    const auto yr =
        sub(conv_transpose2d(xr, w_re, b_re, sp), conv_transpose2d(xi, w_im, zero, sp));
    const auto yi =
        add(conv_transpose2d(xr, w_im, b_im, sp), conv_transpose2d(xi, w_re, zero, sp));
    return concat_channels(yr, yi);
  }

  void collect(const std::string& p, ParamCollector<T>& pc) {
    pc.param(p + ".w_re", w_re);
    pc.param(p + ".w_im", w_im);
    pc.param(p + ".b_re", b_re);
    pc.param(p + ".b_im", b_im);
  }
};

// Whitening batch norm for complex channels: centers each channel, then
// multiplies by the inverse square root of its 2x2 re/im covariance, in
// closed form, followed by a symmetric 2x2 affine and a complex shift.
template <typename T>
struct ComplexBatchNorm2d {
  Var<T> g_rr, g_ii, g_ri, b_re, b_im;
  Tensor<T> run_mr, run_mi, run_vrr, run_vii, run_vri;
  T momentum = T(0.1);
  T eps = T(1e-5);

  ComplexBatchNorm2d() = default;
  explicit ComplexBatchNorm2d(Eigen::Index c)
      : g_rr(Tensor<T>::full(1, c, 1, 1, T(1) / std::sqrt(T(2))), true),
        g_ii(Tensor<T>::full(1, c, 1, 1, T(1) / std::sqrt(T(2))), true),
        g_ri(Tensor<T>::zeros(1, c, 1, 1), true),
        b_re(Tensor<T>::zeros(1, c, 1, 1), true),
        b_im(Tensor<T>::zeros(1, c, 1, 1), true),
        run_mr(Tensor<T>::zeros(1, c, 1, 1)),
        run_mi(Tensor<T>::zeros(1, c, 1, 1)),
        run_vrr(Tensor<T>::full(1, c, 1, 1, T(1) / std::sqrt(T(2)))),
        run_vii(Tensor<T>::full(1, c, 1, 1, T(1) / std::sqrt(T(2)))),
        run_vri(Tensor<T>::zeros(1, c, 1, 1)) {}

  Var<T> forward(const Var<T>& x, bool train) {
    const Eigen::Index c = x.value().c() / 2;
    const auto xr = slice_channels(x, 0, c);
    const auto xi = slice_channels(x, c, 2 * c);

    Var<T> xrc, xic, vrr, vii, vri;
    if (train) {
      const auto mr = reduce_mean(xr, true, false, true, true);
      const auto mi = reduce_mean(xi, true, false, true, true);
      xrc = sub(xr, mr);
      xic = sub(xi, mi);
      const auto vrr_raw = reduce_mean(mul(xrc, xrc), true, false, true, true);
      const auto vii_raw = reduce_mean(mul(xic, xic), true, false, true, true);
      const auto vri_raw = reduce_mean(mul(xrc, xic), true, false, true, true);
      for (Eigen::Index k = 0; k < c; ++k) {
        run_mr.data[k] = (T(1) - momentum) * run_mr.data[k] + momentum * mr.value().data[k];
        run_mi.data[k] = (T(1) - momentum) * run_mi.data[k] + momentum * mi.value().data[k];
        run_vrr.data[k] = (T(1) - momentum) * run_vrr.data[k] + momentum * vrr_raw.value().data[k];
        run_vii.data[k] = (T(1) - momentum) * run_vii.data[k] + momentum * vii_raw.value().data[k];
        run_vri.data[k] = (T(1) - momentum) * run_vri.data[k] + momentum * vri_raw.value().data[k];
      }
      vrr = offset(vrr_raw, eps);
      vii = offset(vii_raw, eps);
      vri = vri_raw;
    } else {
      xrc = sub(xr, constant(run_mr));
      xic = sub(xi, constant(run_mi));
      auto vrr_t = run_vrr;
      auto vii_t = run_vii;
      for (auto& v : vrr_t.data) v += eps;
      for (auto& v : vii_t.data) v += eps;
      vrr = constant(std::move(vrr_t));
      vii = constant(std::move(vii_t));
      vri = constant(run_vri);
    }

    // inverse square root of [[vrr, vri], [vri, vii]]
    const auto s = sqrt_op(sub(mul(vrr, vii), mul(vri, vri)));
    const auto t = sqrt_op(add(add(vrr, vii), scale(s, T(2))));
    const auto inv = div(constant(Tensor<T>::scalar(T(1))), mul(s, t));
    const auto w_rr = mul(add(vii, s), inv);
    const auto w_ii = mul(add(vrr, s), inv);
    const auto w_ri = scale(mul(vri, inv), T(-1));

    const auto hr = add(mul(w_rr, xrc), mul(w_ri, xic));
    const auto hi = add(mul(w_ri, xrc), mul(w_ii, xic));

    const auto yr = add(add(mul(g_rr, hr), mul(g_ri, hi)), b_re);
    const auto yi = add(add(mul(g_ri, hr), mul(g_ii, hi)), b_im);
    return concat_channels(yr, yi);
  }

  void collect(const std::string& p, ParamCollector<T>& pc) {
    pc.param(p + ".g_rr", g_rr);
    pc.param(p + ".g_ii", g_ii);
    pc.param(p + ".g_ri", g_ri);
    pc.param(p + ".b_re", b_re);
    pc.param(p + ".b_im", b_im);
    pc.buffer(p + ".run_mr", run_mr);
    pc.buffer(p + ".run_mi", run_mi);
    pc.buffer(p + ".run_vrr", run_vrr);
    pc.buffer(p + ".run_vii", run_vii);
    pc.buffer(p + ".run_vri", run_vri);
  }
};

// dw 7x7 -> channel LayerNorm -> 1x1 expand 4x -> GELU -> 1x1 reduce, with
// a residual connection around the whole stack.
template <typename T>
struct ConvNeXtBlock {
  Conv2d<T> dw, pw1, pw2;
  LayerNorm<T> ln;

  ConvNeXtBlock() = default;
  ConvNeXtBlock(Eigen::Index c, Rng& rng)
      : dw(c, c, 7, 7, ConvSpec{1, 1, 3, 3, 0, 0, c}, rng),
        pw1(c, 4 * c, 1, 1, ConvSpec{}, rng),
        pw2(4 * c, c, 1, 1, ConvSpec{}, rng),
        ln(c) {}

  Var<T> forward(const Var<T>& x) const {
    return add(x, pw2.forward(gelu(pw1.forward(ln.forward(dw.forward(x))))));
  }

  void collect(const std::string& p, ParamCollector<T>& pc) {
    dw.collect(p + ".dw", pc);
    ln.collect(p + ".ln", pc);
    pw1.collect(p + ".pw1", pc);
    pw2.collect(p + ".pw2", pc);
  }
};

}  // namespace doppler::nn
