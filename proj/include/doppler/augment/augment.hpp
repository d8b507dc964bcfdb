#pragma once

#include <vector>

#include "doppler/augment/scene.hpp"

namespace doppler::augment {

// Re-simulates the scene on a finer grid and takes a random crop of the
// original pixel count, i.e. a zoomed-in view of the same flow with the
// same speckle seed. ratio > 1 shrinks the field of view per pixel by that
// factor. crop_seed picks the window.
DopplerSample zoom_sample(const SceneSpec& scene, double ratio, std::uint64_t crop_seed);

// Lateral mirror: beam order reversed, geometry window negated, truth
// values kept (radial projections are mirror-invariant). Involution up to
// the flipped tag.
DopplerSample flip_sample(const DopplerSample& sample);

// Re-simulates with PRF scaled by u ~ Uniform[0.4, 0.6], shrinking the
// Nyquist span so fast pixels wrap. The sample is tagged aliased only if
// some in-mask pixel actually exceeds the reduced Nyquist velocity.
DopplerSample make_aliased_variant(const SceneSpec& scene, std::uint64_t draw_seed);

// Scales the ensemble by its global peak modulus, so max |s| == 1 after.
// Geometry, truth and mask are untouched. Throws DataError on an all-zero
// ensemble.
void normalize_sample(DopplerSample& sample);

// Fraction of in-mask pixels whose mean slow-time power r0 falls below
// power_threshold.
double low_power_fraction(const DopplerSample& sample, double power_threshold);

// Keep rule used when assembling datasets: a sample is dropped when more
// than max_low_fraction of its mask is below the power threshold.
bool power_qc(const DopplerSample& sample, double power_threshold,
              double max_low_fraction = 0.7);

// Dataset-wide threshold: db_below decibels under the median masked r0
// pooled over all samples.
double power_threshold_from_median(const std::vector<const DopplerSample*>& samples,
                                   double db_below = 20.0);

}  // namespace doppler::augment
