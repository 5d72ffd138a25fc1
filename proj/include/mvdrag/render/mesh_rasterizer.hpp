#pragma once

#include "mvdrag/core/camera.hpp"
#include "mvdrag/core/image.hpp"
#include "mvdrag/core/mesh.hpp"

namespace mvdrag {

/// Z-buffered rasterization with perspective-correct vertex-color (albedo)
/// interpolation. Meshes without colors render in a uniform light gray.
/// Triangles crossing the near plane are dropped. Depth is nearest-hit z.
ViewImage rasterize_mesh(const TriMesh& mesh, const Camera& camera, double background = 0.5,
                         double near_plane = 0.01);

} // namespace mvdrag
