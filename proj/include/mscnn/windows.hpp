#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mscnn/dataset.hpp"
#include "mscnn/rng.hpp"
#include "mscnn/standardization.hpp"
#include "mscnn/tensor.hpp"

namespace mscnn {

/// Per-slice window counts used for training.
inline constexpr Index kDefaultPositiveWindows = 150;
inline constexpr Index kDefaultNegativeWindows = 325;

/// Marker for window pixels that fall outside the source image.
inline constexpr float kOutsideImage = std::numeric_limits<float>::quiet_NaN();

/// A training window referenced by its center; the patch is cut on demand.
struct WindowCenter {
  Index slice = 0;
  Index row = 0;
  Index col = 0;
  int target = 0;
};

/// A cut (unstandardized) training window. Out-of-image pixels hold kOutsideImage.
struct WindowSample {
  Raster patch;
  int target = 0;
  std::string source_id;
  Index row = 0;
  Index col = 0;
};

/// side x side neighborhood of (row, col); out-of-image positions take `fill`.
Raster extract_window(const Raster& image, Index row, Index col, Index side, float fill);

/// Positive centers are distinct tumor pixels (with replacement only when the
/// tumor has fewer than n_pos pixels); negatives likewise over mask == 0.
/// Positives come first in the result.
std::vector<WindowCenter> sample_window_centers(const SliceRecord& slice, Index slice_index, Index n_pos, Index n_neg,
                                                Rng& rng);

std::vector<WindowSample> sample_windows(const SliceRecord& slice, Index n_pos, Index n_neg, Index window, Rng& rng);

/// Mean and population std over every in-image window pixel (with multiplicity).
/// Throws DataError when the population is empty or has zero variance.
StandardizationStats compute_standardization(const std::vector<WindowSample>& windows);

/// Same statistics computed from window coverage counts, without cutting patches.
StandardizationStats compute_standardization(const std::vector<SliceRecord>& slices,
                                             const std::vector<WindowCenter>& centers, Index window);

/// (x - mean) / std in double, rounded to float; out-of-image markers map to 0.
inline float standardize_pixel(float x, const StandardizationStats& stats) {
  if (std::isnan(x)) return 0.0f;
  return static_cast<float>((static_cast<double>(x) - stats.mean) / stats.std);
}

/// Elementwise standardize_pixel.
Raster standardize(const Raster& patch, const StandardizationStats& stats);

/// Cuts and standardizes the given windows into a [B,1,side,side] tensor.
template <typename Scalar>
Tensor<Scalar> window_batch(const std::vector<SliceRecord>& slices, const std::vector<WindowCenter>& centers,
                            const std::vector<Index>& order, Index begin, Index end, Index side,
                            const StandardizationStats& stats);

}  // namespace mscnn
