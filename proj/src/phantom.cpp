#include "mscnn/phantom.hpp"

#include <cmath>
#include <numbers>

#include "mscnn/errors.hpp"
#include "mscnn/rng.hpp"

namespace mscnn {

const std::array<PhantomTexture, 3>& phantom_textures() {
  static const std::array<PhantomTexture, 3> textures = {{
      {4.0, 0.0},
      {7.0, std::numbers::pi / 3.0},
      {11.0, 2.0 * std::numbers::pi / 3.0},
  }};
  return textures;
}

std::vector<SliceRecord> generate_phantoms(int n_slices, Eigen::Index size, std::uint64_t seed) {
  if (size < kMinPhantomSide)
    throw ParameterError("phantom size must be >= " + std::to_string(kMinPhantomSide) + ", got " + std::to_string(size));
  if (n_slices < 1) throw ParameterError("phantom count must be >= 1");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  static const View kViews[] = {View::sagittal, View::coronal, View::axial};

  std::vector<SliceRecord> records;
  records.reserve(static_cast<std::size_t>(n_slices));
  const double s = static_cast<double>(size);
  for (int n = 0; n < n_slices; ++n) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(n)));
    SliceRecord rec;
    rec.label = n % 3 + 1;
    rec.fold = n % kNumFolds;
    rec.view = kViews[(n / 3) % 3];
    rec.id = "phantom_" + std::to_string(n);
    rec.pid = "P" + std::to_string(n);
    rec.image.resize(size, size);
    rec.mask = MaskRaster::Zero(size, size);

    // Low-frequency background: a few random long-wavelength cosines.
    struct Wave {
      double ky, kx, phase, amp;
    };
    std::array<Wave, 4> waves;
    for (auto& w : waves)
      w = {kTwoPi * rng.uniform(-2.0, 2.0) / s, kTwoPi * rng.uniform(-2.0, 2.0) / s, rng.uniform(0.0, kTwoPi),
           rng.uniform(0.02, 0.05)};

    const double head_r = s * rng.uniform(0.40, 0.46);
    const double cy = s * rng.uniform(0.38, 0.62), cx = s * rng.uniform(0.38, 0.62);
    const double ra = s * rng.uniform(0.11, 0.18), rb = s * rng.uniform(0.11, 0.18);
    const double rot = rng.uniform(0.0, std::numbers::pi);

    const PhantomTexture& tex = phantom_textures()[static_cast<std::size_t>(rec.label - 1)];
    const double period = tex.period * rng.uniform(0.95, 1.05);
    const double theta = tex.orientation + rng.uniform(-0.15, 0.15);
    const double phase = rng.uniform(0.0, kTwoPi);
    const double ct = std::cos(rot), st = std::sin(rot);

    for (Eigen::Index i = 0; i < size; ++i) {
      for (Eigen::Index j = 0; j < size; ++j) {
        const double y = static_cast<double>(i), x = static_cast<double>(j);
        double v = 0.15;
        for (const auto& w : waves) v += w.amp * std::cos(w.ky * y + w.kx * x + w.phase);
        const double rh = std::hypot(y - s / 2.0, x - s / 2.0);
        v += 0.2 / (1.0 + std::exp((rh - head_r) / 1.5));

        const double u = ((x - cx) * ct + (y - cy) * st) / ra;
        const double t = (-(x - cx) * st + (y - cy) * ct) / rb;
        if (u * u + t * t <= 1.0) {
          rec.mask(i, j) = 1;
          v = 0.55 + 0.3 * std::sin(kTwoPi * (x * std::cos(theta) + y * std::sin(theta)) / period + phase);
        }
        v += rng.uniform(-0.03, 0.03);
        rec.image(i, j) = static_cast<float>(v);
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace mscnn
