#include "doppler/clutter/svd_filter.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace doppler::clutter {

namespace {

Eigen::MatrixXcd casorati(const IQEnsemble& iq) {
  const Eigen::Index hw = static_cast<Eigen::Index>(iq.height()) * iq.width();
  Eigen::MatrixXcd x(hw, iq.packet());
  for (int k = 0; k < iq.packet(); ++k)
    x.col(k) = Eigen::Map<const Eigen::VectorXcd>(iq.frames[k].data(), hw);
  return x;
}

void scatter(const Eigen::MatrixXcd& x, IQEnsemble& iq) {
  const Eigen::Index hw = x.rows();
  for (int k = 0; k < iq.packet(); ++k)
    Eigen::Map<Eigen::VectorXcd>(iq.frames[k].data(), hw) = x.col(k);
}

}  // namespace

CasoratiSvd casorati_svd(const IQEnsemble& iq) {
  validate(iq);
  const Eigen::MatrixXcd x = casorati(iq);
  const Eigen::MatrixXcd gram = x.adjoint() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  require_data(eig.info() == Eigen::Success, "svd: eigendecomposition failed");

  const int n = iq.packet();
  CasoratiSvd out;
  out.singular_values.resize(n);
  out.right_vectors.resize(n, n);
  for (int c = 0; c < n; ++c) {
    const int src = n - 1 - c;  // eigensolver sorts ascending
    out.singular_values(c) = std::sqrt(std::max(0.0, eig.eigenvalues()(src)));
    Eigen::VectorXcd v = eig.eigenvectors().col(src);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double mag = std::abs(v(i));  // unit-norm vector, so 1e-9 means "nonzero"
      if (mag > 1e-9) {
        v *= std::conj(v(i)) / mag;
        break;
      }
    }
    out.right_vectors.col(c) = v;
  }
  return out;
}

IQEnsemble svd_clutter_filter(const IQEnsemble& iq, int discard_count) {
  require_data(discard_count >= 0 && discard_count < iq.packet(),
               "svd filter: discard_count must lie in [0, packet_size)");
  if (discard_count == 0) {
    IQEnsemble copy = iq;
    validate(copy);
    return copy;
  }
  const CasoratiSvd svd = casorati_svd(iq);
  const Eigen::MatrixXcd x = casorati(iq);
  const auto clutter_basis = svd.right_vectors.leftCols(discard_count);
  const Eigen::MatrixXcd filtered = x - (x * clutter_basis) * clutter_basis.adjoint();

  IQEnsemble out = iq;
  scatter(filtered, out);
  return out;
}

IQEnsemble slow_time_subsample(const IQEnsemble& iq, int stride) {
  require_data(stride >= 1, "subsample: stride must be >= 1");
  validate(iq);
  IQEnsemble out;
  out.geometry = iq.geometry;
  out.params = iq.params;
  for (int k = 0; k < iq.packet(); k += stride) out.frames.push_back(iq.frames[k]);
  out.params.packet_size = static_cast<int>(out.frames.size());
  out.params.prf_hz = iq.params.prf_hz / stride;
  require_data(out.params.packet_size >= 2,
               "subsample: stride leaves fewer than two slow-time samples");
  return out;
}

}  // namespace doppler::clutter
