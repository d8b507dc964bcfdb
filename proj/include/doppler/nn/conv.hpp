#pragma once

#include "doppler/nn/ops.hpp"

namespace doppler::nn {

namespace detail {

// Patch matrix for one sample: row (c*kh + ki)*kw + kj, column oy*outW + ox
// holds src(c, oy*sh - ph + ki, ox*sw - pw + kj), zero outside the image.
template <typename T>
void im2col(const T* src, Eigen::Index C, Eigen::Index H, Eigen::Index W, Eigen::Index kh,
            Eigen::Index kw, Eigen::Index sh, Eigen::Index sw, Eigen::Index ph, Eigen::Index pw,
            Eigen::Index out_h, Eigen::Index out_w, T* dst) {
  const Eigen::Index cols = out_h * out_w;
  for (Eigen::Index c = 0; c < C; ++c)
    for (Eigen::Index ki = 0; ki < kh; ++ki)
      for (Eigen::Index kj = 0; kj < kw; ++kj) {
        T* row = dst + ((c * kh + ki) * kw + kj) * cols;
        const T* plane = src + c * H * W;
        for (Eigen::Index oy = 0; oy < out_h; ++oy) {
          const Eigen::Index y = oy * sh - ph + ki;
          T* out_row = row + oy * out_w;
          if (y < 0 || y >= H) {
            std::fill(out_row, out_row + out_w, T(0));
            continue;
          }
          const T* src_row = plane + y * W;
          for (Eigen::Index ox = 0; ox < out_w; ++ox) {
            const Eigen::Index x = ox * sw - pw + kj;
            out_row[ox] = (x >= 0 && x < W) ? src_row[x] : T(0);
          }
        }
      }
}

// Adjoint of im2col: scatter-add the patch matrix back onto the image.
template <typename T>
void col2im_add(const T* mat, Eigen::Index C, Eigen::Index H, Eigen::Index W, Eigen::Index kh,
                Eigen::Index kw, Eigen::Index sh, Eigen::Index sw, Eigen::Index ph,
                Eigen::Index pw, Eigen::Index out_h, Eigen::Index out_w, T* dst) {
  const Eigen::Index cols = out_h * out_w;
  for (Eigen::Index c = 0; c < C; ++c)
    for (Eigen::Index ki = 0; ki < kh; ++ki)
      for (Eigen::Index kj = 0; kj < kw; ++kj) {
        const T* row = mat + ((c * kh + ki) * kw + kj) * cols;
        T* plane = dst + c * H * W;
        for (Eigen::Index oy = 0; oy < out_h; ++oy) {
          const Eigen::Index y = oy * sh - ph + ki;
          if (y < 0 || y >= H) continue;
          const T* src_row = row + oy * out_w;
          T* dst_row = plane + y * W;
          for (Eigen::Index ox = 0; ox < out_w; ++ox) {
            const Eigen::Index x = ox * sw - pw + kj;
            if (x >= 0 && x < W) dst_row[x] += src_row[ox];
          }
        }
      }
}

}  // namespace detail

struct ConvSpec {
  Eigen::Index stride_h = 1, stride_w = 1;
  Eigen::Index pad_h = 0, pad_w = 0;
  Eigen::Index out_pad_h = 0, out_pad_w = 0;  // transpose only
  Eigen::Index groups = 1;
};

// x: [N, inC, H, W], weight: [outC, inC/groups, kh, kw], bias: [1, outC, 1, 1]
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvSpec& sp) {
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const Eigen::Index N = xv.n(), inC = xv.c(), H = xv.h(), W = xv.w();
  const Eigen::Index outC = wv.n(), kh = wv.h(), kw = wv.w();
  const Eigen::Index g = sp.groups;
  if (inC % g != 0 || outC % g != 0 || wv.c() != inC / g)
    throw NumericError("conv2d: weight " + shape_string(wv) + " does not fit input " +
                       shape_string(xv) + " with groups " + std::to_string(g));
  if (bias.value().c() != outC || bias.value().size() != outC)
    throw NumericError("conv2d: bias size mismatch");
  const Eigen::Index out_h = (H + 2 * sp.pad_h - kh) / sp.stride_h + 1;
  const Eigen::Index out_w = (W + 2 * sp.pad_w - kw) / sp.stride_w + 1;
  if (out_h < 1 || out_w < 1) throw NumericError("conv2d: empty output");

  const Eigen::Index inCg = inC / g, outCg = outC / g;
  const Eigen::Index K = inCg * kh * kw;
  const Eigen::Index P = out_h * out_w;
  multiply_count() += static_cast<std::uint64_t>(N) * outC * P * K;

  Tensor<T> out(N, outC, out_h, out_w);
  std::vector<T> cols(static_cast<std::size_t>(inC * kh * kw * P));
  for (Eigen::Index n = 0; n < N; ++n) {
    detail::im2col(xv.data.data() + n * inC * H * W, inC, H, W, kh, kw, sp.stride_h, sp.stride_w,
                   sp.pad_h, sp.pad_w, out_h, out_w, cols.data());
    for (Eigen::Index gi = 0; gi < g; ++gi) {
      ConstMapRM<T> wmap(wv.data.data() + gi * outCg * K, outCg, K);
      ConstMapRM<T> cmap(cols.data() + gi * inCg * kh * kw * P, K, P);
      MapRM<T> ymap(out.data.data() + (n * outC + gi * outCg) * P, outCg, P);
      ymap.noalias() = wmap * cmap;
    }
    for (Eigen::Index c = 0; c < outC; ++c) {
      T* row = out.data.data() + (n * outC + c) * P;
      const T b = bias.value().data[static_cast<std::size_t>(c)];
      for (Eigen::Index p = 0; p < P; ++p) row[p] += b;
    }
  }

  return detail::make_result<T>(
      std::move(out), {x, weight, bias}, [x, weight, bias, sp, out_h, out_w](Node<T>& self) {
        const auto& xv2 = x.value();
        const auto& wv2 = weight.value();
        const Eigen::Index N = xv2.n(), inC = xv2.c(), H = xv2.h(), W = xv2.w();
        const Eigen::Index outC = wv2.n(), kh = wv2.h(), kw = wv2.w();
        const Eigen::Index g = sp.groups, inCg = inC / g, outCg = outC / g;
        const Eigen::Index K = inCg * kh * kw;
        const Eigen::Index P = out_h * out_w;

        std::vector<T> cols(static_cast<std::size_t>(inC * kh * kw * P));
        std::vector<T> dcols(cols.size());
        for (Eigen::Index n = 0; n < N; ++n) {
          const bool need_cols = weight.requires_grad();
          if (need_cols)
            detail::im2col(xv2.data.data() + n * inC * H * W, inC, H, W, kh, kw, sp.stride_h,
                           sp.stride_w, sp.pad_h, sp.pad_w, out_h, out_w, cols.data());
          for (Eigen::Index gi = 0; gi < g; ++gi) {
            ConstMapRM<T> gy(self.grad.data.data() + (n * outC + gi * outCg) * P, outCg, P);
            if (weight.requires_grad()) {
              ConstMapRM<T> cmap(cols.data() + gi * inCg * kh * kw * P, K, P);
              MapRM<T> gw(weight.node_->grad_storage().data.data() + gi * outCg * K, outCg, K);
              gw.noalias() += gy * cmap.transpose();
            }
            if (x.requires_grad()) {
              ConstMapRM<T> wmap(wv2.data.data() + gi * outCg * K, outCg, K);
              MapRM<T> dc(dcols.data() + gi * inCg * kh * kw * P, K, P);
              dc.noalias() = wmap.transpose() * gy;
            }
          }
          if (x.requires_grad())
            detail::col2im_add(dcols.data(), inC, H, W, kh, kw, sp.stride_h, sp.stride_w,
                               sp.pad_h, sp.pad_w, out_h, out_w,
                               x.node_->grad_storage().data.data() + n * inC * H * W);
          if (bias.requires_grad()) {
            auto& gb = bias.node_->grad_storage();
            for (Eigen::Index c = 0; c < outC; ++c) {
              const T* row = self.grad.data.data() + (n * outC + c) * P;
              T acc = T(0);
              for (Eigen::Index p = 0; p < P; ++p) acc += row[p];
              gb.data[static_cast<std::size_t>(c)] += acc;
            }
          }
        }
      });
}

// x: [N, inC, H, W], weight: [inC, outC/groups, kh, kw], bias: [1, outC, 1, 1]
// out spatial size: (H-1)*stride - 2*pad + kernel + out_pad
template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
                        const ConvSpec& sp) {
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const Eigen::Index N = xv.n(), inC = xv.c(), H = xv.h(), W = xv.w();
  const Eigen::Index kh = wv.h(), kw = wv.w();
  const Eigen::Index g = sp.groups;
  if (wv.n() != inC || inC % g != 0) throw NumericError("conv_transpose2d: weight mismatch");
  const Eigen::Index outCg = wv.c();
  const Eigen::Index outC = outCg * g;
  if (bias.value().size() != outC) throw NumericError("conv_transpose2d: bias size mismatch");
  const Eigen::Index out_h = (H - 1) * sp.stride_h - 2 * sp.pad_h + kh + sp.out_pad_h;
  const Eigen::Index out_w = (W - 1) * sp.stride_w - 2 * sp.pad_w + kw + sp.out_pad_w;
  if (out_h < 1 || out_w < 1) throw NumericError("conv_transpose2d: empty output");

  const Eigen::Index inCg = inC / g;
  const Eigen::Index K = outCg * kh * kw;
  const Eigen::Index P = H * W;
  multiply_count() += static_cast<std::uint64_t>(N) * g * K * P * inCg;

  Tensor<T> out(N, outC, out_h, out_w);
  std::vector<T> cols(static_cast<std::size_t>(g * K * P));
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index gi = 0; gi < g; ++gi) {
      ConstMapRM<T> wmap(wv.data.data() + gi * inCg * K, inCg, K);
      ConstMapRM<T> xmap(xv.data.data() + (n * inC + gi * inCg) * P, inCg, P);
      MapRM<T> cmap(cols.data() + gi * K * P, K, P);
      cmap.noalias() = wmap.transpose() * xmap;
      detail::col2im_add(cols.data() + gi * K * P, outCg, out_h, out_w, kh, kw, sp.stride_h,
                         sp.stride_w, sp.pad_h, sp.pad_w, H, W,
                         out.data.data() + (n * outC + gi * outCg) * out_h * out_w);
    }
    for (Eigen::Index c = 0; c < outC; ++c) {
      T* row = out.data.data() + (n * outC + c) * out_h * out_w;
      const T b = bias.value().data[static_cast<std::size_t>(c)];
      for (Eigen::Index p = 0; p < out_h * out_w; ++p) row[p] += b;
    }
  }

  return detail::make_result<T>(
      std::move(out), {x, weight, bias}, [x, weight, bias, sp, out_h, out_w](Node<T>& self) {
        const auto& xv2 = x.value();
        const auto& wv2 = weight.value();
        const Eigen::Index N = xv2.n(), inC = xv2.c(), H = xv2.h(), W = xv2.w();
        const Eigen::Index kh = wv2.h(), kw = wv2.w();
        const Eigen::Index g = sp.groups, inCg = inC / g, outCg = wv2.c();
        const Eigen::Index outC = outCg * g;
        const Eigen::Index K = outCg * kh * kw;
        const Eigen::Index P = H * W;

        std::vector<T> dcols(static_cast<std::size_t>(K * P));
        for (Eigen::Index n = 0; n < N; ++n) {
          for (Eigen::Index gi = 0; gi < g; ++gi) {
            // gather the output grad into patch form; it is the adjoint of
            // the forward scatter, i.e. plain im2col of the grad image
            detail::im2col(self.grad.data.data() + (n * outC + gi * outCg) * out_h * out_w, outCg,
                           out_h, out_w, kh, kw, sp.stride_h, sp.stride_w, sp.pad_h, sp.pad_w, H,
                           W, dcols.data());
            ConstMapRM<T> dcmap(dcols.data(), K, P);
            if (x.requires_grad()) {
              ConstMapRM<T> wmap(wv2.data.data() + gi * inCg * K, inCg, K);
              MapRM<T> gx(x.node_->grad_storage().data.data() + (n * inC + gi * inCg) * P, inCg,
                          P);
              gx.noalias() += wmap * dcmap;
            }
            if (weight.requires_grad()) {
              ConstMapRM<T> xmap(xv2.data.data() + (n * inC + gi * inCg) * P, inCg, P);
              MapRM<T> gw(weight.node_->grad_storage().data.data() + gi * inCg * K, inCg, K);
              gw.noalias() += xmap * dcmap.transpose();
            }
          }
          if (bias.requires_grad()) {
            auto& gb = bias.node_->grad_storage();
            for (Eigen::Index c = 0; c < outC; ++c) {
              const T* row = self.grad.data.data() + (n * outC + c) * out_h * out_w;
              T acc = T(0);
              for (Eigen::Index p = 0; p < out_h * out_w; ++p) acc += row[p];
              gb.data[static_cast<std::size_t>(c)] += acc;
            }
          }
        }
      });
}

// 2x2 max pooling with stride 2; spatial dims must be even.
template <typename T>
Var<T> maxpool2x2(const Var<T>& x) {
  const auto& xv = x.value();
  if (xv.h() % 2 != 0 || xv.w() % 2 != 0)
    throw NumericError("maxpool: odd spatial size " + shape_string(xv));
  const Eigen::Index N = xv.n(), C = xv.c(), H = xv.h(), W = xv.w();
  Tensor<T> out(N, C, H / 2, W / 2);
  auto argmax = std::make_shared<std::vector<Eigen::Index>>(out.data.size());
  Eigen::Index idx = 0;
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index c = 0; c < C; ++c) {
      const T* plane = xv.data.data() + (n * C + c) * H * W;
      for (Eigen::Index y = 0; y < H; y += 2)
        for (Eigen::Index x2 = 0; x2 < W; x2 += 2, ++idx) {
          Eigen::Index best = y * W + x2;
          for (const Eigen::Index cand :
               {y * W + x2 + 1, (y + 1) * W + x2, (y + 1) * W + x2 + 1})
            if (plane[cand] > plane[best]) best = cand;
          out.data[idx] = plane[best];
          (*argmax)[idx] = (n * C + c) * H * W + best;
        }
    }
  return detail::make_result<T>(std::move(out), {x}, [x, argmax](Node<T>& self) {
    auto& g = x.node_->grad_storage();
    for (std::size_t i = 0; i < argmax->size(); ++i)
      g.data[static_cast<std::size_t>((*argmax)[i])] += self.grad.data[i];
  });
}

}  // namespace doppler::nn
