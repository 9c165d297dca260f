#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mscnn/dataset.hpp"

namespace mscnn {

/// Texture of the tumor interior for one class: an oriented sinusoid.
struct PhantomTexture {
  double period;       // pixels per cycle
  double orientation;  // radians
};

/// Class 1..3 textures (index 0 = class 1).
const std::array<PhantomTexture, 3>& phantom_textures();

inline constexpr Eigen::Index kMinPhantomSide = 96;

/// Synthetic slices: smooth background, a head-shaped disk, and one ellipse
/// filled with the class texture. Labels and folds are assigned round-robin.
/// Deterministic in `seed`.
std::vector<SliceRecord> generate_phantoms(int n_slices, Eigen::Index size, std::uint64_t seed);

}  // namespace mscnn
