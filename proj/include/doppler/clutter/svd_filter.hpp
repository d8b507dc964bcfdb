#pragma once

#include "doppler/core/sample.hpp"

namespace doppler::clutter {

// Thin SVD of the Casorati matrix X (pixels x packet): slow-time singular
// vectors and singular values in descending order. Computed from the n x n
// Gram matrix X^H X, so cost is O(hw n^2) rather than O(hw^2 n). Each
// singular vector is rotated so its first non-negligible entry is real
// positive, making the decomposition reproducible.
struct CasoratiSvd {
  Eigen::VectorXd singular_values;
  Eigen::MatrixXcd right_vectors;  // columns, one per singular value
};

CasoratiSvd casorati_svd(const IQEnsemble& iq);

// Removes the discard_count strongest singular components: the standard
// slow-time SVD clutter wall filter. The discarded part is the orthogonal
// projection of X onto the dropped singular vectors, so input energy splits
// exactly between output and discard.
IQEnsemble svd_clutter_filter(const IQEnsemble& iq, int discard_count);

// Keeps every stride-th slow-time sample starting at frame 0 and divides
// the PRF accordingly; ceil(n / stride) frames survive. Halving the rate
// this way doubles per-sample phase steps, trading Nyquist span for frame
// rate exactly as a slower acquisition would.
IQEnsemble slow_time_subsample(const IQEnsemble& iq, int stride);

}  // namespace doppler::clutter
