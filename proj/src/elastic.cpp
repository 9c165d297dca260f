#include "mscnn/elastic.hpp"

#include <algorithm>
#include <cmath>

#include "mscnn/errors.hpp"

namespace mscnn {
namespace {

using Field = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Field smooth(const Field& in, const std::vector<double>& kernel) {
  const Eigen::Index h = in.rows(), w = in.cols();
  const auto r = static_cast<Eigen::Index>(kernel.size() / 2);
  Field tmp(h, w), out(h, w);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) {
      double acc = 0.0;
      for (Eigen::Index t = -r; t <= r; ++t)
        acc += kernel[static_cast<std::size_t>(t + r)] * in(i, std::clamp<Eigen::Index>(j + t, 0, w - 1));
      tmp(i, j) = acc;
    }
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) {
      double acc = 0.0;
      for (Eigen::Index t = -r; t <= r; ++t)
        acc += kernel[static_cast<std::size_t>(t + r)] * tmp(std::clamp<Eigen::Index>(i + t, 0, h - 1), j);
      out(i, j) = acc;
    }
  return out;
}

Field random_field(Eigen::Index h, Eigen::Index w, Rng& rng) {
  Field f(h, w);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.uniform(-1.0, 1.0);
  return f;
}

}  // namespace

ElasticParams ElasticParams::for_side(Eigen::Index side) {
  const double scale = static_cast<double>(side) / 128.0;
  return {34.0 * scale, 4.0 * scale};
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("gaussian sigma must be positive");
  const auto r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double total = 0.0;
  for (int t = -r; t <= r; ++t) total += k[static_cast<std::size_t>(t + r)] = std::exp(-0.5 * t * t / (sigma * sigma));
  for (double& v : k) v /= total;
  return k;
}

std::pair<Raster, MaskRaster> elastic_transform(const Raster& image, const MaskRaster& mask, double alpha,
                                                double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw ParameterError("elastic sigma must be positive");
  if (!(alpha >= 0.0)) throw ParameterError("elastic alpha must be non-negative");
  if (image.rows() != mask.rows() || image.cols() != mask.cols()) throw ShapeError("image and mask shapes differ");
  const Eigen::Index h = image.rows(), w = image.cols();

  const auto kernel = gaussian_kernel(sigma);
  const Field dy = smooth(random_field(h, w, rng), kernel) * alpha;
  const Field dx = smooth(random_field(h, w, rng), kernel) * alpha;

  Raster out_image(h, w);
  MaskRaster out_mask(h, w);
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) {
      const double y = std::clamp(static_cast<double>(i) + dy(i, j), 0.0, static_cast<double>(h - 1));
      const double x = std::clamp(static_cast<double>(j) + dx(i, j), 0.0, static_cast<double>(w - 1));
      const auto y0 = static_cast<Eigen::Index>(std::floor(y));
      const auto x0 = static_cast<Eigen::Index>(std::floor(x));
      const Eigen::Index y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
      const double fy = y - static_cast<double>(y0), fx = x - static_cast<double>(x0);
      const double top = image(y0, x0) * (1.0 - fx) + image(y0, x1) * fx;
      const double bottom = image(y1, x0) * (1.0 - fx) + image(y1, x1) * fx;
      out_image(i, j) = static_cast<float>(top * (1.0 - fy) + bottom * fy);
      out_mask(i, j) = mask(static_cast<Eigen::Index>(std::lround(y)), static_cast<Eigen::Index>(std::lround(x)));
    }
  }
  return {std::move(out_image), std::move(out_mask)};
}

std::vector<SliceRecord> augment_training_set(const std::vector<SliceRecord>& records, Rng& rng) {
  constexpr int kMaxAttempts = 16;
  const std::uint64_t base = rng.next();
  std::vector<SliceRecord> out(records.begin(), records.end());
  out.resize(2 * records.size());

#pragma omp parallel for schedule(dynamic)
  for (std::size_t n = 0; n < records.size(); ++n) {
    const SliceRecord& src = records[n];
    const ElasticParams params = ElasticParams::for_side(std::max(src.height(), src.width()));
    Rng local(mix_seed(base, n));
    SliceRecord copy = src;
    copy.id = src.id + "_elastic";
    for (int attempt = 0;; ++attempt) {
      auto [image, mask] = elastic_transform(src.image, src.mask, params.alpha, params.sigma, local);
      if ((mask != 0).any() || attempt + 1 == kMaxAttempts) {
        copy.image = std::move(image);
        copy.mask = std::move(mask);
        break;
      }
    }
    out[records.size() + n] = std::move(copy);
  }
  for (std::size_t n = records.size(); n < out.size(); ++n)
    if (out[n].tumor_pixels() == 0) throw DataError("elastic warp erased the tumor of " + out[n].id);
  return out;
}

}  // namespace mscnn
