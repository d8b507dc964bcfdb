#include "doppler/estimate/autocorrelation.hpp"

#include <cmath>
#include <vector>

namespace doppler::estimate {

AutocorrMap lag_one_autocorrelation(const IQEnsemble& iq) {
  validate(iq);
  const int n = iq.packet();
  AutocorrMap ac;
  ac.r1 = ComplexField::Zero(iq.height(), iq.width());
  ac.r0 = RealField::Zero(iq.height(), iq.width());
  for (int k = 0; k < n; ++k) {
    ac.r0 += iq.frames[k].abs2();
    if (k < n - 1) ac.r1 += iq.frames[k].conjugate() * iq.frames[k + 1];
  }
  ac.r0 /= static_cast<double>(n);
  return ac;
}

namespace {

std::vector<double> hamming(int taps) {
  std::vector<double> w(taps);
  if (taps == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int m = 0; m < taps; ++m)
    w[m] = 0.54 - 0.46 * std::cos(2.0 * kPi * m / (taps - 1));
  return w;
}

// One separable pass along rows (axis 0) or columns (axis 1), zero-padded.
RealField conv_axis(const RealField& f, const std::vector<double>& w, int axis) {
  const int taps = static_cast<int>(w.size());
  const int shift = (taps - 1) / 2;
  RealField out = RealField::Zero(f.rows(), f.cols());
  for (int m = 0; m < taps; ++m) {
    const int off = m - shift;
    if (axis == 0) {
      const int lo = std::max(0, -off);
      const int hi = std::min<int>(f.rows(), f.rows() - off);
      if (lo >= hi) continue;
      out.middleRows(lo, hi - lo) += w[m] * f.middleRows(lo + off, hi - lo);
    } else {
      const int lo = std::max(0, -off);
      const int hi = std::min<int>(f.cols(), f.cols() - off);
      if (lo >= hi) continue;
      out.middleCols(lo, hi - lo) += w[m] * f.middleCols(lo + off, hi - lo);
    }
  }
  return out;
}

}  // namespace

RealField smooth_field(const RealField& f, int axial_taps, int lateral_taps) {
  require_data(axial_taps >= 1 && lateral_taps >= 1, "smooth: tap counts must be >= 1");
  const auto wa = hamming(axial_taps);
  const auto wl = hamming(lateral_taps);
  const RealField num = conv_axis(conv_axis(f, wa, 0), wl, 1);
  const RealField ones = RealField::Ones(f.rows(), f.cols());
  const RealField den = conv_axis(conv_axis(ones, wa, 0), wl, 1);
  return num / den;
}

AutocorrMap smooth_autocorrelation(const AutocorrMap& ac, int axial_taps, int lateral_taps) {
  AutocorrMap out;
  const RealField re = smooth_field(ac.r1.real(), axial_taps, lateral_taps);
  const RealField im = smooth_field(ac.r1.imag(), axial_taps, lateral_taps);
  out.r1 = re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
  out.r0 = smooth_field(ac.r0, axial_taps, lateral_taps);
  return out;
}

VelocityMap doppler_velocity_map(const IQEnsemble& iq, bool smoothed, int axial_taps,
                                 int lateral_taps) {
  AutocorrMap ac = lag_one_autocorrelation(iq);
  if (smoothed) ac = smooth_autocorrelation(ac, axial_taps, lateral_taps);
  const double v_n = nyquist_velocity(iq.params);
  VelocityMap vm;
  vm.nyquist_mps = v_n;
  vm.values.resize(iq.height(), iq.width());
  for (Eigen::Index j = 0; j < vm.values.cols(); ++j)
    for (Eigen::Index i = 0; i < vm.values.rows(); ++i) {
      const Complex r1 = ac.r1(i, j);
      vm.values(i, j) = r1 == Complex(0.0, 0.0) ? 0.0 : -v_n * std::arg(r1) / kPi;
    }
  return vm;
}

MaskField nonzero_lag_mask(const AutocorrMap& ac) {
  MaskField m(ac.r1.rows(), ac.r1.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = ac.r1(i, j) != Complex(0.0, 0.0);
  return m;
}

IQEnsemble reduce_packet(const IQEnsemble& iq, int first, int packet) {
  require_data(packet >= 2, "reduce_packet: packet must be >= 2");
  require_data(first >= 0 && first + packet <= iq.packet(),
               "reduce_packet: slice out of range");
  IQEnsemble out;
  out.params = iq.params;
  out.params.packet_size = packet;
  out.geometry = iq.geometry;
  out.frames.assign(iq.frames.begin() + first, iq.frames.begin() + first + packet);
  return out;
}

}  // namespace doppler::estimate
