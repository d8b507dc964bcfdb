#pragma once

#include <cmath>
#include <cstdint>

#include "doppler/nn/graph.hpp"

namespace doppler::nn {

// Forward-pass multiply-accumulate tally for the convolution ops. Reset it,
// run a forward pass, read it back; used to compare architecture costs.
inline std::uint64_t& multiply_count() {
  thread_local std::uint64_t count = 0;
  return count;
}
inline void reset_multiply_count() { multiply_count() = 0; }

namespace detail {

template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backprop) {
  Var<T> out(std::move(value));
  if (!grad_enabled_flag()) return out;
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->parents.reserve(parents.size());
  for (auto& p : parents) out.node_->parents.push_back(p.node_);
  out.node_->backprop = std::move(backprop);
  return out;
}

inline std::array<Eigen::Index, 4> broadcast_shape(const std::array<Eigen::Index, 4>& a,
                                                   const std::array<Eigen::Index, 4>& b) {
  std::array<Eigen::Index, 4> out{};
  for (int d = 0; d < 4; ++d) {
    if (a[d] == b[d] || b[d] == 1)
      out[d] = a[d];
    else if (a[d] == 1)
      out[d] = b[d];
    else
      throw NumericError("broadcast: incompatible shapes");
  }
  return out;
}

// strides into a tensor viewed through a broadcast shape (0 on expanded dims)
template <typename T>
std::array<Eigen::Index, 4> broadcast_strides(const Tensor<T>& t,
                                              const std::array<Eigen::Index, 4>& out_shape) {
  std::array<Eigen::Index, 4> strides{};
  Eigen::Index s = 1;
  std::array<Eigen::Index, 4> natural{};
  for (int d = 3; d >= 0; --d) {
    natural[d] = s;
    s *= t.shape[d];
  }
  for (int d = 0; d < 4; ++d) strides[d] = (t.shape[d] == 1 && out_shape[d] != 1) ? 0 : natural[d];
  return strides;
}

// Elementwise binary op with broadcasting. Value = f(a, b); backward pushes
// g * dfa(a, b) and g * dfb(a, b) into the parents, accumulating over
// broadcast dims through the zero strides.
template <typename T, typename F, typename Da, typename Db>
Var<T> binary(const Var<T>& a, const Var<T>& b, F f, Da dfa, Db dfb) {
  const auto& av = a.value();
  const auto& bv = b.value();
  const auto shape = broadcast_shape(av.shape, bv.shape);
  Tensor<T> out(shape[0], shape[1], shape[2], shape[3]);

  const auto sa = broadcast_strides(av, shape);
  const auto sb = broadcast_strides(bv, shape);
  Eigen::Index idx = 0;
  for (Eigen::Index n = 0; n < shape[0]; ++n)
    for (Eigen::Index c = 0; c < shape[1]; ++c)
      for (Eigen::Index h = 0; h < shape[2]; ++h) {
        const Eigen::Index base_a = n * sa[0] + c * sa[1] + h * sa[2];
        const Eigen::Index base_b = n * sb[0] + c * sb[1] + h * sb[2];
        for (Eigen::Index w = 0; w < shape[3]; ++w, ++idx)
          out.data[idx] = f(av.data[base_a + w * sa[3]], bv.data[base_b + w * sb[3]]);
      }

  return make_result<T>(
      std::move(out), {a, b}, [a, b, shape, sa, sb, dfa, dfb](Node<T>& self) {
        const auto& av2 = a.value();
        const auto& bv2 = b.value();
        Tensor<T>* ga = a.requires_grad() ? &a.node_->grad_storage() : nullptr;
        Tensor<T>* gb = b.requires_grad() ? &b.node_->grad_storage() : nullptr;
        Eigen::Index idx2 = 0;
        for (Eigen::Index n = 0; n < shape[0]; ++n)
          for (Eigen::Index c = 0; c < shape[1]; ++c)
            for (Eigen::Index h = 0; h < shape[2]; ++h) {
              const Eigen::Index base_a = n * sa[0] + c * sa[1] + h * sa[2];
              const Eigen::Index base_b = n * sb[0] + c * sb[1] + h * sb[2];
              for (Eigen::Index w = 0; w < shape[3]; ++w, ++idx2) {
                const T g = self.grad.data[idx2];
                const T x = av2.data[base_a + w * sa[3]];
                const T y = bv2.data[base_b + w * sb[3]];
                if (ga) ga->data[base_a + w * sa[3]] += g * dfa(x, y);
                if (gb) gb->data[base_b + w * sb[3]] += g * dfb(x, y);
              }
            }
      });
}

// Elementwise unary op: value = f(x), backward g * df(x).
template <typename T, typename F, typename D>
Var<T> unary(const Var<T>& x, F f, D df) {
  const auto& xv = x.value();
  Tensor<T> out;
  out.shape = xv.shape;
  out.data.resize(xv.data.size());
  for (std::size_t i = 0; i < xv.data.size(); ++i) out.data[i] = f(xv.data[i]);
  return make_result<T>(std::move(out), {x}, [x, df](Node<T>& self) {
    auto& g = x.node_->grad_storage();
    const auto& xv2 = x.value();
    for (std::size_t i = 0; i < xv2.data.size(); ++i)
      g.data[i] += self.grad.data[i] * df(xv2.data[i]);
  });
}

}  // namespace detail

template <typename T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return detail::binary(
      a, b, [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
      [](T, T) { return T(1); });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return detail::binary(
      a, b, [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
      [](T, T) { return T(-1); });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return detail::binary(
      a, b, [](T x, T y) { return x * y; }, [](T, T y) { return y; },
      [](T x, T) { return x; });
}

template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  return detail::binary(
      a, b, [](T x, T y) { return x / y; }, [](T, T y) { return T(1) / y; },
      [](T x, T y) { return -x / (y * y); });
}

template <typename T>
Var<T> scale(const Var<T>& x, T s) {
  return detail::unary(
      x, [s](T v) { return v * s; }, [s](T) { return s; });
}

template <typename T>
Var<T> offset(const Var<T>& x, T s) {
  return detail::unary(
      x, [s](T v) { return v + s; }, [](T) { return T(1); });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return detail::unary(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T v) { return v > T(0) ? T(1) : T(0); });
}

// exact gaussian-error-function form
template <typename T>
Var<T> gelu(const Var<T>& x) {
  const T inv_sqrt2 = T(0.7071067811865475244);
  const T inv_sqrt2pi = T(0.3989422804014326779);
  return detail::unary(
      x,
      [=](T v) { return T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2)); },
      [=](T v) {
        return T(0.5) * (T(1) + std::erf(v * inv_sqrt2)) +
               v * inv_sqrt2pi * std::exp(T(-0.5) * v * v);
      });
}

template <typename T>
Var<T> sqrt_op(const Var<T>& x) {
  return detail::unary(
      x, [](T v) { return std::sqrt(v); },
      [](T v) { return T(0.5) / std::sqrt(v); });
}

// Sum over the selected axes, keeping them as size-1 dims.
template <typename T>
Var<T> reduce_sum(const Var<T>& x, bool over_n, bool over_c, bool over_h, bool over_w) {
  const auto& xv = x.value();
  const std::array<Eigen::Index, 4> shape{over_n ? 1 : xv.shape[0], over_c ? 1 : xv.shape[1],
                                          over_h ? 1 : xv.shape[2], over_w ? 1 : xv.shape[3]};
  Tensor<T> out(shape[0], shape[1], shape[2], shape[3]);
  const auto so = detail::broadcast_strides(out, xv.shape);
  Eigen::Index idx = 0;
  for (Eigen::Index n = 0; n < xv.shape[0]; ++n)
    for (Eigen::Index c = 0; c < xv.shape[1]; ++c)
      for (Eigen::Index h = 0; h < xv.shape[2]; ++h) {
        const Eigen::Index base = n * so[0] + c * so[1] + h * so[2];
        for (Eigen::Index w = 0; w < xv.shape[3]; ++w, ++idx)
          out.data[base + w * so[3]] += xv.data[idx];
      }
  return detail::make_result<T>(std::move(out), {x}, [x, so](Node<T>& self) {
    auto& g = x.node_->grad_storage();
    const auto& xs = x.value().shape;
    Eigen::Index idx2 = 0;
    for (Eigen::Index n = 0; n < xs[0]; ++n)
      for (Eigen::Index c = 0; c < xs[1]; ++c)
        for (Eigen::Index h = 0; h < xs[2]; ++h) {
          const Eigen::Index base = n * so[0] + c * so[1] + h * so[2];
          for (Eigen::Index w = 0; w < xs[3]; ++w, ++idx2)
            g.data[idx2] += self.grad.data[base + w * so[3]];
        }
  });
}

template <typename T>
Var<T> reduce_mean(const Var<T>& x, bool over_n, bool over_c, bool over_h, bool over_w) {
  const auto& s = x.value().shape;
  Eigen::Index count = 1;
  if (over_n) count *= s[0];
  if (over_c) count *= s[1];
  if (over_h) count *= s[2];
  if (over_w) count *= s[3];
  return scale(reduce_sum(x, over_n, over_c, over_h, over_w), T(1) / static_cast<T>(count));
}

template <typename T>
Var<T> sum_all(const Var<T>& x) {
  return reduce_sum(x, true, true, true, true);
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.n() != bv.n() || av.h() != bv.h() || av.w() != bv.w())
    throw NumericError("concat: mismatched shapes " + shape_string(av) + " vs " + shape_string(bv));
  Tensor<T> out(av.n(), av.c() + bv.c(), av.h(), av.w());
  const Eigen::Index plane = av.h() * av.w();
  for (Eigen::Index n = 0; n < av.n(); ++n) {
    std::copy(av.data.begin() + n * av.c() * plane, av.data.begin() + (n + 1) * av.c() * plane,
              out.data.begin() + n * out.c() * plane);
    std::copy(bv.data.begin() + n * bv.c() * plane, bv.data.begin() + (n + 1) * bv.c() * plane,
              out.data.begin() + (n * out.c() + av.c()) * plane);
  }
  return detail::make_result<T>(std::move(out), {a, b}, [a, b, plane](Node<T>& self) {
    const Eigen::Index ca = a.value().c(), cb = b.value().c();
    const Eigen::Index co = ca + cb;
    for (Eigen::Index n = 0; n < a.value().n(); ++n) {
      if (a.requires_grad()) {
        auto& ga = a.node_->grad_storage();
        for (Eigen::Index i = 0; i < ca * plane; ++i)
          ga.data[n * ca * plane + i] += self.grad.data[n * co * plane + i];
      }
      if (b.requires_grad()) {
        auto& gb = b.node_->grad_storage();
        for (Eigen::Index i = 0; i < cb * plane; ++i)
          gb.data[n * cb * plane + i] += self.grad.data[(n * co + ca) * plane + i];
      }
    }
  });
}

template <typename T>
Var<T> slice_channels(const Var<T>& x, Eigen::Index c0, Eigen::Index c1) {
  const auto& xv = x.value();
  if (c0 < 0 || c1 <= c0 || c1 > xv.c()) throw NumericError("slice: bad channel range");
  Tensor<T> out(xv.n(), c1 - c0, xv.h(), xv.w());
  const Eigen::Index plane = xv.h() * xv.w();
  for (Eigen::Index n = 0; n < xv.n(); ++n)
    std::copy(xv.data.begin() + (n * xv.c() + c0) * plane,
              xv.data.begin() + (n * xv.c() + c1) * plane,
              out.data.begin() + n * (c1 - c0) * plane);
  return detail::make_result<T>(std::move(out), {x}, [x, c0, c1, plane](Node<T>& self) {
    auto& g = x.node_->grad_storage();
    const Eigen::Index cx = x.value().c();
    const Eigen::Index cs = c1 - c0;
    for (Eigen::Index n = 0; n < x.value().n(); ++n)
      for (Eigen::Index i = 0; i < cs * plane; ++i)
        g.data[(n * cx + c0) * plane + i] += self.grad.data[n * cs * plane + i];
  });
}

// Centered zero-pad or crop to the requested spatial size (mixed per axis).
template <typename T>
Var<T> resize_to(const Var<T>& x, Eigen::Index out_h, Eigen::Index out_w) {
  const auto& xv = x.value();
  if (xv.h() == out_h && xv.w() == out_w) return x;
  Tensor<T> out(xv.n(), xv.c(), out_h, out_w);
  // source row y maps to output row y + dh (dh may be negative for a crop)
  const Eigen::Index dh = (out_h - xv.h()) / 2;
  const Eigen::Index dw = (out_w - xv.w()) / 2;
  for (Eigen::Index n = 0; n < xv.n(); ++n)
    for (Eigen::Index c = 0; c < xv.c(); ++c)
      for (Eigen::Index h = 0; h < xv.h(); ++h) {
        const Eigen::Index oh = h + dh;
        if (oh < 0 || oh >= out_h) continue;
        for (Eigen::Index w = 0; w < xv.w(); ++w) {
          const Eigen::Index ow = w + dw;
          if (ow < 0 || ow >= out_w) continue;
          out.at(n, c, oh, ow) = xv.at(n, c, h, w);
        }
      }
  return detail::make_result<T>(std::move(out), {x}, [x, dh, dw, out_h, out_w](Node<T>& self) {
    auto& g = x.node_->grad_storage();
    const auto& xs = x.value();
    for (Eigen::Index n = 0; n < xs.n(); ++n)
      for (Eigen::Index c = 0; c < xs.c(); ++c)
        for (Eigen::Index h = 0; h < xs.h(); ++h) {
          const Eigen::Index oh = h + dh;
          if (oh < 0 || oh >= out_h) continue;
          for (Eigen::Index w = 0; w < xs.w(); ++w) {
            const Eigen::Index ow = w + dw;
            if (ow < 0 || ow >= out_w) continue;
            g.at(n, c, h, w) += self.grad.at(n, c, oh, ow);
          }
        }
  });
}

// Mean squared error over the pixels selected by a 0/1 weight map, as a
// scalar graph node: sum(weight * (pred - target)^2) / sum(weight).
template <typename T>
Var<T> masked_mse(const Var<T>& pred, const Tensor<T>& target, const Tensor<T>& weight) {
  T wsum = T(0);
  for (const T v : weight.data) wsum += v;
  if (!(wsum > T(0))) throw NumericError("masked mse: empty weight map");
  const auto diff = sub(pred, constant(target));
  const auto sq = mul(diff, diff);
  return scale(sum_all(mul(sq, constant(weight))), T(1) / wsum);
}

}  // namespace doppler::nn
