#pragma once

#include "mvdrag/core/dragset.hpp"

#include <Eigen/Core>

#include <array>
#include <utility>
#include <vector>

namespace mvdrag {

/// Masks of one view at one feature resolution. Cells are row-major
/// indices y * width + x.
struct LayerMask {
    int stride = 1;
    int height = 0;
    int width = 0;
    /// (edit cell, origin cell) correspondences, one per edit cell.
    std::vector<std::pair<int, int>> correspondences;
    /// Binary masks over the feature grid.
    std::vector<bool> edit;
    std::vector<bool> origin;
    std::vector<bool> unedited;

    std::vector<int> unedited_cells() const;
    bool empty() const { return correspondences.empty(); }
};

/// masks[view][layer].
struct EnergyMasks {
    std::array<std::vector<LayerMask>, kNumViews> views;
};

/// Feature grid size of a layer with `stride` over an image of the given size.
struct LayerShape {
    int stride;
    int height;
    int width;
};

/// Patch of side max(1, ceil(3 / stride)) cells around each visible pair's
/// endpoints, mapped by integer division. The unedited mask is the
/// complement of the source and target patches dilated by one cell.
EnergyMasks build_masks(const DragSet& drags, const std::vector<LayerShape>& layers);

/// Layer shapes for an image of `height` x `width` pixels.
std::vector<LayerShape> layer_shapes(const std::vector<int>& strides, int height, int width);

} // namespace mvdrag
