#pragma once

#include "mvdrag/core/gaussian_cloud.hpp"
#include "mvdrag/core/mesh.hpp"

namespace mvdrag {

/// Axis-aligned cube [-half, half]^3: 8 vertices, 12 triangles, outward winding.
TriMesh make_cube_mesh(double half = 0.5);

/// UV sphere; vertex colors encode the outward normal (0.5 + 0.4 n).
TriMesh make_uv_sphere_mesh(double radius, int stacks, int slices);

/// `count` isotropic splats on a Fibonacci lattice over a sphere, colored
/// by normal like make_uv_sphere_mesh. Opacity and world-space extent given
/// in activated form.
GaussianCloud make_gaussian_sphere(int count, double radius, double splat_scale, double opacity = 0.95);

} // namespace mvdrag
