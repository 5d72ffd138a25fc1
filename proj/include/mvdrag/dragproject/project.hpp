#pragma once

#include "mvdrag/core/dragset.hpp"
#include "mvdrag/core/image.hpp"
#include "mvdrag/render/rig.hpp"

namespace mvdrag {

struct ProjectionOptions {
    /// Slack on the rendered-depth comparison, as a fraction of scene_radius.
    double depth_tolerance = 0.01;
    double scene_radius = 1.0;
};

/// Projects every drag pair into the four rig views and fills
/// drags.projections. A pair is visible in a view iff both endpoints land
/// inside the image, in front of the camera, and no deeper than the rendered
/// depth at their (rounded) pixel plus the tolerance. Pairs hidden in all four
/// views are logged and left invisible everywhere.
DragSet project_pairs(const DragSet& drags, const MultiViewImageSet& views, const RigConfig& rig,
                      const ProjectionOptions& options = {});

} // namespace mvdrag
