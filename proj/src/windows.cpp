#include "mscnn/windows.hpp"

#include <cmath>

#include "mscnn/errors.hpp"

namespace mscnn {
namespace {

StandardizationStats finish_stats(double count, double mean, double sq_dev) {
  if (count <= 0.0) throw DataError("standardization over an empty pixel population");
  const double std = std::sqrt(sq_dev / count);
  if (!(std > 1e-12 * std::max(1.0, std::abs(mean))))
    throw DataError("degenerate training data: pixel variance is zero");
  return {mean, std};
}

/// Picks `n` indices into `pool` uniformly: distinct when the pool is large
/// enough, otherwise with replacement.
std::vector<Index> pick(Index pool, Index n, Rng& rng) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(n));
  if (pool >= n) {
    std::vector<Index> idx(static_cast<std::size_t>(pool));
    for (Index i = 0; i < pool; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(pool - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
      out.push_back(idx[static_cast<std::size_t>(i)]);
    }
  } else if (pool > 0) {
    for (Index i = 0; i < n; ++i) out.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(pool))));
  }
  return out;
}

}  // namespace

Raster extract_window(const Raster& image, Index row, Index col, Index side, float fill) {
  if (side < 1 || side % 2 == 0) throw ParameterError("window side must be odd, got " + std::to_string(side));
  const Index r = side / 2;
  Raster patch = Raster::Constant(side, side, fill);
  const Index i0 = std::max<Index>(0, row - r), i1 = std::min<Index>(image.rows(), row + r + 1);
  const Index j0 = std::max<Index>(0, col - r), j1 = std::min<Index>(image.cols(), col + r + 1);
  if (i0 < i1 && j0 < j1)
    patch.block(i0 - (row - r), j0 - (col - r), i1 - i0, j1 - j0) = image.block(i0, j0, i1 - i0, j1 - j0);
  return patch;
}

std::vector<WindowCenter> sample_window_centers(const SliceRecord& slice, Index slice_index, Index n_pos, Index n_neg,
                                                Rng& rng) {
  if (n_pos < 0 || n_neg < 0) throw ParameterError("window counts must be non-negative");
  std::vector<Index> tumor, healthy;
  for (Index i = 0; i < slice.mask.size(); ++i) (slice.mask.data()[i] ? tumor : healthy).push_back(i);
  if (tumor.empty()) throw MaskError(slice.id, "mask has no tumor pixels");
  if (healthy.empty() && n_neg > 0) throw MaskError(slice.id, "mask has no healthy pixels for negative windows");

  std::vector<WindowCenter> centers;
  centers.reserve(static_cast<std::size_t>(n_pos + n_neg));
  const Index width = slice.width();
  for (Index k : pick(static_cast<Index>(tumor.size()), n_pos, rng)) {
    const Index p = tumor[static_cast<std::size_t>(k)];
    centers.push_back({slice_index, p / width, p % width, slice.label});
  }
  for (Index k : pick(static_cast<Index>(healthy.size()), n_neg, rng)) {
    const Index p = healthy[static_cast<std::size_t>(k)];
    centers.push_back({slice_index, p / width, p % width, 0});
  }
  return centers;
}

std::vector<WindowSample> sample_windows(const SliceRecord& slice, Index n_pos, Index n_neg, Index window, Rng& rng) {
  std::vector<WindowSample> out;
  for (const auto& c : sample_window_centers(slice, 0, n_pos, n_neg, rng))
    out.push_back({extract_window(slice.image, c.row, c.col, window, kOutsideImage), c.target, slice.id, c.row, c.col});
  return out;
}

StandardizationStats compute_standardization(const std::vector<WindowSample>& windows) {
  double count = 0.0, total = 0.0;
  for (const auto& w : windows)
    for (Index i = 0; i < w.patch.size(); ++i)
      if (const float x = w.patch.data()[i]; !std::isnan(x)) {
        count += 1.0;
        total += x;
      }
  if (count <= 0.0) throw DataError("standardization over an empty pixel population");
  const double mean = total / count;
  double sq = 0.0;
  for (const auto& w : windows)
    for (Index i = 0; i < w.patch.size(); ++i)
      if (const float x = w.patch.data()[i]; !std::isnan(x)) sq += (x - mean) * (x - mean);
  return finish_stats(count, mean, sq);
}

StandardizationStats compute_standardization(const std::vector<SliceRecord>& slices,
                                             const std::vector<WindowCenter>& centers, Index window) {
  using Counts = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Index r = window / 2;

  // Coverage of every pixel = number of windows containing it, via an
  // integral image of center counts.
  std::vector<Counts> coverage(slices.size());
  {
    std::vector<Counts> hits(slices.size());
    for (std::size_t s = 0; s < slices.size(); ++s) hits[s] = Counts::Zero(slices[s].height(), slices[s].width());
    for (const auto& c : centers) hits.at(static_cast<std::size_t>(c.slice))(c.row, c.col) += 1.0;
    for (std::size_t s = 0; s < slices.size(); ++s) {
      const Index h = slices[s].height(), w = slices[s].width();
      Counts integral = Counts::Zero(h + 1, w + 1);
      for (Index i = 0; i < h; ++i)
        for (Index j = 0; j < w; ++j)
          integral(i + 1, j + 1) = hits[s](i, j) + integral(i, j + 1) + integral(i + 1, j) - integral(i, j);
      coverage[s].resize(h, w);
      for (Index i = 0; i < h; ++i) {
        const Index a = std::max<Index>(0, i - r), b = std::min<Index>(h, i + r + 1);
        for (Index j = 0; j < w; ++j) {
          const Index c0 = std::max<Index>(0, j - r), c1 = std::min<Index>(w, j + r + 1);
          coverage[s](i, j) = integral(b, c1) - integral(a, c1) - integral(b, c0) + integral(a, c0);
        }
      }
    }
  }

  double count = 0.0, total = 0.0;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    count += coverage[s].sum();
    total += (coverage[s] * slices[s].image.cast<double>()).sum();
  }
  if (count <= 0.0) throw DataError("standardization over an empty pixel population");
  const double mean = total / count;
  double sq = 0.0;
  for (std::size_t s = 0; s < slices.size(); ++s)
    sq += (coverage[s] * (slices[s].image.cast<double>() - mean).square()).sum();
  return finish_stats(count, mean, sq);
}

Raster standardize(const Raster& patch, const StandardizationStats& stats) {
  if (!(stats.std > 0.0)) throw DataError("standardization std must be positive");
  return patch.unaryExpr([&stats](float x) { return standardize_pixel(x, stats); });
}

template <typename Scalar>
Tensor<Scalar> window_batch(const std::vector<SliceRecord>& slices, const std::vector<WindowCenter>& centers,
                            const std::vector<Index>& order, Index begin, Index end, Index side,
                            const StandardizationStats& stats) {
  Tensor<Scalar> batch({end - begin, 1, side, side});
  const Index r = side / 2;
  for (Index n = begin; n < end; ++n) {
    const auto& c = centers[static_cast<std::size_t>(order[static_cast<std::size_t>(n)])];
    const Raster& image = slices[static_cast<std::size_t>(c.slice)].image;
    Scalar* dst = batch.data() + (n - begin) * side * side;
    for (Index u = 0; u < side; ++u) {
      const Index i = c.row - r + u;
      for (Index v = 0; v < side; ++v) {
        const Index j = c.col - r + v;
        const bool inside = i >= 0 && i < image.rows() && j >= 0 && j < image.cols();
        dst[u * side + v] = inside ? static_cast<Scalar>(standardize_pixel(image(i, j), stats)) : Scalar(0);
      }
    }
  }
  return batch;
}

template Tensor<float> window_batch(const std::vector<SliceRecord>&, const std::vector<WindowCenter>&,
                                    const std::vector<Index>&, Index, Index, Index, const StandardizationStats&);
template Tensor<double> window_batch(const std::vector<SliceRecord>&, const std::vector<WindowCenter>&,
                                     const std::vector<Index>&, Index, Index, Index, const StandardizationStats&);

}  // namespace mscnn
