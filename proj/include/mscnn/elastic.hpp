#pragma once

#include <utility>
#include <vector>

#include "mscnn/dataset.hpp"
#include "mscnn/rng.hpp"

namespace mscnn {

/// Displacement scale and smoothing width, in pixels.
struct ElasticParams {
  double alpha = 34.0;
  double sigma = 4.0;

  /// Defaults are tuned for 128-pixel slices; both scale linearly with the
  /// longer image side.
  static ElasticParams for_side(Eigen::Index side);
};

/// Random elastic warp: per-pixel displacements uniform in [-1,1], Gaussian
/// smoothed (width sigma) and scaled by alpha. The image is resampled
/// bilinearly and the mask by nearest neighbour, both clamping to the border.
std::pair<Raster, MaskRaster> elastic_transform(const Raster& image, const MaskRaster& mask, double alpha,
                                                double sigma, Rng& rng);

/// Normalized 1-D Gaussian kernel truncated at 3 sigma.
std::vector<double> gaussian_kernel(double sigma);

/// Originals followed by one warped copy of each (id suffixed "_elastic").
/// Copies keep label, pid, view and fold. Each copy draws from its own
/// stream derived from `rng`, so the result does not depend on thread order.
std::vector<SliceRecord> augment_training_set(const std::vector<SliceRecord>& records, Rng& rng);

}  // namespace mscnn
