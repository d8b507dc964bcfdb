#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "doppler/nn/layers.hpp"

namespace doppler::nn {

// A velocity regressor: input is a planar slow-time packet
// [N, 2*packet, H, W] (real parts of all frames, then imaginary parts),
// output is [N, 1, H, W] phase in radians, to be mapped to velocity by
// v = -nyquist * phase / pi.
template <typename T>
struct Model {
  virtual ~Model() = default;
  virtual Var<T> forward(const Var<T>& x, bool train) = 0;
  virtual void collect(ParamCollector<T>& pc) = 0;
  virtual std::string arch() const = 0;

  // slow-time frames per input (the planar channel count is twice this)
  int packet = 0;

  // spatial size of the deepest feature map in the most recent forward
  std::array<Eigen::Index, 2> last_bottleneck_hw{0, 0};
};

template <typename T>
std::vector<Var<T>*> trainable_parameters(Model<T>& m) {
  ParamCollector<T> pc;
  m.collect(pc);
  std::vector<Var<T>*> out;
  out.reserve(pc.params.size());
  for (auto& [name, v] : pc.params) out.push_back(v);
  return out;
}

template <typename T>
std::size_t parameter_count(Model<T>& m) {
  ParamCollector<T> pc;
  m.collect(pc);
  std::size_t total = 0;
  for (const auto& [name, v] : pc.params) total += static_cast<std::size_t>(v->value().size());
  return total;
}

// Complex pairs count once: tensors named "*_im" are the imaginary halves
// of pairs registered alongside a "*_re" twin.
template <typename T>
std::size_t logical_parameter_count(Model<T>& m) {
  ParamCollector<T> pc;
  m.collect(pc);
  std::size_t total = 0;
  for (const auto& [name, v] : pc.params) {
    if (name.size() >= 3 && name.compare(name.size() - 3, 3, "_im") == 0) continue;
    total += static_cast<std::size_t>(v->value().size());
  }
  return total;
}

namespace detail {

constexpr ConvSpec pad2_5x5() { return ConvSpec{1, 1, 2, 2, 0, 0, 1}; }
constexpr ConvSpec pad1_3x3() { return ConvSpec{1, 1, 1, 1, 0, 0, 1}; }
constexpr ConvSpec up_5x5() { return ConvSpec{2, 2, 2, 2, 1, 1, 1}; }

}  // namespace detail

// Two-scale U-Net on raw re/im channels: per level conv5 + conv3 with batch
// norm and ReLU, 2x2 max pooling down, strided 5x5 transposed conv up, skip
// concatenation, linear 1x1 head.
template <typename T>
struct RealUNet final : Model<T> {
  Conv2d<T> e1a, e1b, e2a, e2b, e3a, e3b;
  BatchNorm2d<T> n1a, n1b, n2a, n2b, n3a, n3b;
  ConvTranspose2d<T> up2, up1;
  Conv2d<T> d2a, d2b, d1a, d1b;
  BatchNorm2d<T> m2a, m2b, m1a, m1b;
  Conv2d<T> head;

  RealUNet(Eigen::Index in_c, Rng& rng)
      : e1a(in_c, 32, 5, 5, detail::pad2_5x5(), rng),
        e1b(32, 32, 3, 3, detail::pad1_3x3(), rng),
        e2a(32, 64, 5, 5, detail::pad2_5x5(), rng),
        e2b(64, 64, 3, 3, detail::pad1_3x3(), rng),
        e3a(64, 128, 5, 5, detail::pad2_5x5(), rng),
        e3b(128, 128, 3, 3, detail::pad1_3x3(), rng),
        n1a(32),
        n1b(32),
        n2a(64),
        n2b(64),
        n3a(128),
        n3b(128),
        up2(128, 128, 5, 5, detail::up_5x5(), rng),
        up1(64, 64, 5, 5, detail::up_5x5(), rng),
        d2a(128 + 64, 64, 5, 5, detail::pad2_5x5(), rng),
        d2b(64, 64, 3, 3, detail::pad1_3x3(), rng),
        d1a(64 + 32, 32, 5, 5, detail::pad2_5x5(), rng),
        d1b(32, 32, 3, 3, detail::pad1_3x3(), rng),
        m2a(64),
        m2b(64),
        m1a(32),
        m1b(32),
        head(32, 1, 1, 1, ConvSpec{}, rng) {}

  Var<T> forward(const Var<T>& x, bool train) override {
    const auto f1 = relu(n1b.forward(e1b.forward(relu(n1a.forward(e1a.forward(x), train))), train));
    const auto p1 = maxpool2x2(f1);
    const auto f2 = relu(n2b.forward(e2b.forward(relu(n2a.forward(e2a.forward(p1), train))), train));
    const auto p2 = maxpool2x2(f2);
    const auto f3 = relu(n3b.forward(e3b.forward(relu(n3a.forward(e3a.forward(p2), train))), train));
    this->last_bottleneck_hw = {f3.value().h(), f3.value().w()};
    const auto u2 = concat_channels(up2.forward(f3), f2);
    const auto g2 = relu(m2b.forward(d2b.forward(relu(m2a.forward(d2a.forward(u2), train))), train));
    const auto u1 = concat_channels(up1.forward(g2), f1);
    const auto g1 = relu(m1b.forward(d1b.forward(relu(m1a.forward(d1a.forward(u1), train))), train));
    return head.forward(g1);
  }

  void collect(ParamCollector<T>& pc) override {
    e1a.collect("e1a", pc);
    n1a.collect("n1a", pc);
    e1b.collect("e1b", pc);
    n1b.collect("n1b", pc);
    e2a.collect("e2a", pc);
    n2a.collect("n2a", pc);
    e2b.collect("e2b", pc);
    n2b.collect("n2b", pc);
    e3a.collect("e3a", pc);
    n3a.collect("n3a", pc);
    e3b.collect("e3b", pc);
    n3b.collect("n3b", pc);
    up2.collect("up2", pc);
    d2a.collect("d2a", pc);
    m2a.collect("m2a", pc);
    d2b.collect("d2b", pc);
    m2b.collect("m2b", pc);
    up1.collect("up1", pc);
    d1a.collect("d1a", pc);
    m1a.collect("m1a", pc);
    d1b.collect("d1b", pc);
    m1b.collect("m1b", pc);
    head.collect("head", pc);
  }

  std::string arch() const override { return "real_unet"; }
};

// Same topology with complex-valued weights over planar re/im features:
// complex convs, whitening batch norm, ReLU applied to both planes, and a
// real 1x1 head over the final planar pair.
template <typename T>
struct ComplexUNet final : Model<T> {
  ComplexConv2d<T> e1a, e1b, e2a, e2b, e3a, e3b;
  ComplexBatchNorm2d<T> n1a, n1b, n2a, n2b, n3a, n3b;
  ComplexConvTranspose2d<T> up2, up1;
  ComplexConv2d<T> d2a, d2b, d1a, d1b;
  ComplexBatchNorm2d<T> m2a, m2b, m1a, m1b;
  Conv2d<T> head;

  ComplexUNet(Eigen::Index in_pairs, Rng& rng)
      : e1a(in_pairs, 32, 5, 5, detail::pad2_5x5(), rng),
        e1b(32, 32, 3, 3, detail::pad1_3x3(), rng),
        e2a(32, 64, 5, 5, detail::pad2_5x5(), rng),
        e2b(64, 64, 3, 3, detail::pad1_3x3(), rng),
        e3a(64, 128, 5, 5, detail::pad2_5x5(), rng),
        e3b(128, 128, 3, 3, detail::pad1_3x3(), rng),
        n1a(32),
        n1b(32),
        n2a(64),
        n2b(64),
        n3a(128),
        n3b(128),
        up2(128, 128, 5, 5, detail::up_5x5(), rng),
        up1(64, 64, 5, 5, detail::up_5x5(), rng),
        d2a(128 + 64, 64, 5, 5, detail::pad2_5x5(), rng),
        d2b(64, 64, 3, 3, detail::pad1_3x3(), rng),
        d1a(64 + 32, 32, 5, 5, detail::pad2_5x5(), rng),
        d1b(32, 32, 3, 3, detail::pad1_3x3(), rng),
        m2a(64),
        m2b(64),
        m1a(32),
        m1b(32),
        head(64, 1, 1, 1, ConvSpec{}, rng) {}

  Var<T> forward(const Var<T>& x, bool train) override {
    const auto f1 = relu(n1b.forward(e1b.forward(relu(n1a.forward(e1a.forward(x), train))), train));
    const auto p1 = maxpool2x2(f1);
    const auto f2 = relu(n2b.forward(e2b.forward(relu(n2a.forward(e2a.forward(p1), train))), train));
    const auto p2 = maxpool2x2(f2);
    const auto f3 = relu(n3b.forward(e3b.forward(relu(n3a.forward(e3a.forward(p2), train))), train));
    this->last_bottleneck_hw = {f3.value().h(), f3.value().w()};
    const auto u2 = complex_concat(up2.forward(f3), f2);
    const auto g2 = relu(m2b.forward(d2b.forward(relu(m2a.forward(d2a.forward(u2), train))), train));
    const auto u1 = complex_concat(up1.forward(g2), f1);
    const auto g1 = relu(m1b.forward(d1b.forward(relu(m1a.forward(d1a.forward(u1), train))), train));
    return head.forward(g1);
  }

  void collect(ParamCollector<T>& pc) override {
    e1a.collect("e1a", pc);
    n1a.collect("n1a", pc);
    e1b.collect("e1b", pc);
    n1b.collect("n1b", pc);
    e2a.collect("e2a", pc);
    n2a.collect("n2a", pc);
    e2b.collect("e2b", pc);
    n2b.collect("n2b", pc);
    e3a.collect("e3a", pc);
    n3a.collect("n3a", pc);
    e3b.collect("e3b", pc);
    n3b.collect("n3b", pc);
    up2.collect("up2", pc);
    d2a.collect("d2a", pc);
    m2a.collect("m2a", pc);
    d2b.collect("d2b", pc);
    m2b.collect("m2b", pc);
    up1.collect("up1", pc);
    d1a.collect("d1a", pc);
    m1a.collect("m1a", pc);
    d1b.collect("d1b", pc);
    m1b.collect("m1b", pc);
    head.collect("head", pc);
  }

  std::string arch() const override { return "complex_unet"; }
};

// Four-stage ConvNeXt encoder (depths 3/3/9/3, widths 32/64/128/256) with a
// mirrored block decoder. The stem halves depth only; each later stage
// halves both axes, so a 180x40 grid bottoms out at 11x5. Decoder levels
// upsample 2x, pad to the skip's size, fuse by 1x1 conv, then run blocks.
template <typename T>
struct ConvNeXtUNet final : Model<T> {
  Conv2d<T> stem;
  LayerNorm<T> stem_ln;
  std::vector<ConvNeXtBlock<T>> s1, s2, s3, s4, r3, r2, r1;
  LayerNorm<T> dn1_ln, dn2_ln, dn3_ln;
  Conv2d<T> dn1, dn2, dn3;
  ConvTranspose2d<T> up3, up2, up1, final_up;
  Conv2d<T> fuse3, fuse2, fuse1, head;

  ConvNeXtUNet(Eigen::Index in_c, Rng& rng)
      : stem(in_c, 32, 7, 7, ConvSpec{2, 1, 3, 3, 0, 0, 1}, rng),
        stem_ln(32),
        dn1_ln(32),
        dn2_ln(64),
        dn3_ln(128),
        dn1(32, 64, 2, 2, ConvSpec{2, 2, 0, 0, 0, 0, 1}, rng),
        dn2(64, 128, 2, 2, ConvSpec{2, 2, 0, 0, 0, 0, 1}, rng),
        dn3(128, 256, 2, 2, ConvSpec{2, 2, 0, 0, 0, 0, 1}, rng),
        up3(256, 128, 2, 2, ConvSpec{2, 2, 0, 0, 0, 0, 1}, rng),
        up2(128, 64, 2, 2, ConvSpec{2, 2, 0, 0, 0, 0, 1}, rng),
        up1(64, 32, 2, 2, ConvSpec{2, 2, 0, 0, 0, 0, 1}, rng),
        final_up(32, 32, 2, 1, ConvSpec{2, 1, 0, 0, 0, 0, 1}, rng),
        fuse3(256, 128, 1, 1, ConvSpec{}, rng),
        fuse2(128, 64, 1, 1, ConvSpec{}, rng),
        fuse1(64, 32, 1, 1, ConvSpec{}, rng),
        head(32, 1, 1, 1, ConvSpec{}, rng) {
    const auto fill = [&rng](std::vector<ConvNeXtBlock<T>>& v, Eigen::Index c, int depth) {
      v.reserve(static_cast<std::size_t>(depth));
      for (int i = 0; i < depth; ++i) v.emplace_back(c, rng);
    };
    fill(s1, 32, 3);
    fill(s2, 64, 3);
    fill(s3, 128, 9);
    fill(s4, 256, 3);
    fill(r3, 128, 9);
    fill(r2, 64, 3);
    fill(r1, 32, 3);
  }

  static Var<T> run(const std::vector<ConvNeXtBlock<T>>& blocks, Var<T> x) {
    for (const auto& b : blocks) x = b.forward(x);
    return x;
  }

  Var<T> forward(const Var<T>& x, bool) override {
    const auto f1 = run(s1, stem_ln.forward(stem.forward(x)));
    const auto f2 = run(s2, dn1.forward(dn1_ln.forward(f1)));
    const auto f3 = run(s3, dn2.forward(dn2_ln.forward(f2)));
    const auto f4 = run(s4, dn3.forward(dn3_ln.forward(f3)));
    this->last_bottleneck_hw = {f4.value().h(), f4.value().w()};
    const auto u3 = resize_to(up3.forward(f4), f3.value().h(), f3.value().w());
    const auto g3 = run(r3, fuse3.forward(concat_channels(u3, f3)));
    const auto u2 = resize_to(up2.forward(g3), f2.value().h(), f2.value().w());
    const auto g2 = run(r2, fuse2.forward(concat_channels(u2, f2)));
    const auto u1 = resize_to(up1.forward(g2), f1.value().h(), f1.value().w());
    const auto g1 = run(r1, fuse1.forward(concat_channels(u1, f1)));
    return head.forward(final_up.forward(g1));
  }

  void collect(ParamCollector<T>& pc) override {
    const auto stage = [&pc](const char* p, std::vector<ConvNeXtBlock<T>>& v) {
      for (std::size_t i = 0; i < v.size(); ++i) v[i].collect(std::string(p) + std::to_string(i), pc);
    };
    stem.collect("stem", pc);
    stem_ln.collect("stem_ln", pc);
    stage("s1.", s1);
    dn1_ln.collect("dn1_ln", pc);
    dn1.collect("dn1", pc);
    stage("s2.", s2);
    dn2_ln.collect("dn2_ln", pc);
    dn2.collect("dn2", pc);
    stage("s3.", s3);
    dn3_ln.collect("dn3_ln", pc);
    dn3.collect("dn3", pc);
    stage("s4.", s4);
    up3.collect("up3", pc);
    fuse3.collect("fuse3", pc);
    stage("r3.", r3);
    up2.collect("up2", pc);
    fuse2.collect("fuse2", pc);
    stage("r2.", r2);
    up1.collect("up1", pc);
    fuse1.collect("fuse1", pc);
    stage("r1.", r1);
    final_up.collect("final_up", pc);
    head.collect("head", pc);
  }

  std::string arch() const override { return "convnext_unet"; }
};

inline const std::vector<std::string>& model_archs() {
  static const std::vector<std::string> archs = {"real_unet", "complex_unet", "convnext_unet"};
  return archs;
}

// packet = number of slow-time frames n; the input tensor carries 2n planar
// channels. Initialization is fully determined by (arch, packet, seed).
template <typename T>
std::unique_ptr<Model<T>> make_model(const std::string& arch, int packet, std::uint64_t seed) {
  require_config(packet >= 2, "model: packet must be at least 2");
  Rng rng(derive_seed(seed, "init:" + arch));
  std::unique_ptr<Model<T>> model;
  if (arch == "real_unet")
    model = std::make_unique<RealUNet<T>>(2 * packet, rng);
  else if (arch == "complex_unet")
    model = std::make_unique<ComplexUNet<T>>(packet, rng);
  else if (arch == "convnext_unet")
    model = std::make_unique<ConvNeXtUNet<T>>(2 * packet, rng);
  else
    throw ConfigError("unknown model architecture: " + arch);
  model->packet = packet;
  return model;
}

}  // namespace doppler::nn
