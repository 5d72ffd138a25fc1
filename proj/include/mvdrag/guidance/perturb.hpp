#pragma once

#include "mvdrag/core/image.hpp"

#include <cstdint>

namespace mvdrag {

/// Adds N(0, std^2) noise to pixels with alpha < 0.5 and clamps them to
/// [0, 1]. Foreground pixels are copied unchanged.
MultiViewImageSet perturb_background(const MultiViewImageSet& images, double std, std::uint64_t seed);

} // namespace mvdrag
