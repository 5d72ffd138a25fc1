#include "mvdrag/core/primitives.hpp"

#include <cmath>
#include <numbers>

namespace mvdrag {

TriMesh make_cube_mesh(double half) {
    TriMesh mesh;
    mesh.vertices.resize(8, 3);
    for (int i = 0; i < 8; ++i) {
        mesh.vertices.row(i) << ((i & 1) ? half : -half), ((i & 2) ? half : -half), ((i & 4) ? half : -half);
    }
    mesh.faces.resize(12, 3);
    mesh.faces << 0, 2, 1,  1, 2, 3,   // -z
                  4, 5, 6,  5, 7, 6,   // +z
                  0, 1, 4,  1, 5, 4,   // -y
                  2, 6, 3,  3, 6, 7,   // +y
                  0, 4, 2,  2, 4, 6,   // -x
                  1, 3, 5,  3, 7, 5;   // +x
    return mesh;
}

TriMesh make_uv_sphere_mesh(double radius, int stacks, int slices) {
    TriMesh mesh;
    const int rings = stacks - 1;
    const int nv = 2 + rings * slices;
    mesh.vertices.resize(nv, 3);
    mesh.colors.resize(nv, 3);
    auto set_vertex = [&](int i, const Eigen::Vector3d& n) {
        mesh.vertices.row(i) = (radius * n).transpose();
        mesh.colors.row(i) = (0.5 + 0.4 * n.array()).matrix().transpose();
    };
    set_vertex(0, Eigen::Vector3d::UnitY());
    set_vertex(nv - 1, -Eigen::Vector3d::UnitY());
    for (int r = 0; r < rings; ++r) {
        const double theta = std::numbers::pi * (r + 1) / stacks;
        for (int s = 0; s < slices; ++s) {
            const double phi = 2.0 * std::numbers::pi * s / slices;
            set_vertex(1 + r * slices + s,
                       Eigen::Vector3d(std::sin(theta) * std::cos(phi), std::cos(theta), std::sin(theta) * std::sin(phi)));
        }
    }
    std::vector<Eigen::Vector3i> tris;
    auto ring_vertex = [&](int r, int s) { return 1 + r * slices + (s % slices); };
    for (int s = 0; s < slices; ++s) {
        tris.emplace_back(0, ring_vertex(0, s + 1), ring_vertex(0, s));
        tris.emplace_back(nv - 1, ring_vertex(rings - 1, s), ring_vertex(rings - 1, s + 1));
    }
    for (int r = 0; r + 1 < rings; ++r) {
        for (int s = 0; s < slices; ++s) {
            tris.emplace_back(ring_vertex(r, s), ring_vertex(r, s + 1), ring_vertex(r + 1, s));
            tris.emplace_back(ring_vertex(r, s + 1), ring_vertex(r + 1, s + 1), ring_vertex(r + 1, s));
        }
    }
    mesh.faces.resize(static_cast<Eigen::Index>(tris.size()), 3);
    for (std::size_t i = 0; i < tris.size(); ++i) mesh.faces.row(static_cast<Eigen::Index>(i)) = tris[i].transpose();
    return mesh;
}

GaussianCloud make_gaussian_sphere(int count, double radius, double splat_scale, double opacity) {
    GaussianCloud cloud(count, 0);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double y = count == 1 ? 0.0 : 1.0 - 2.0 * (i + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
        const double phi = golden * i;
        const Eigen::Vector3d n(r * std::cos(phi), y, r * std::sin(phi));
        cloud.positions.row(i) = (radius * n).transpose();
        cloud.log_scales.row(i).setConstant(std::log(splat_scale));
        cloud.opacity_logits(i) = logit(opacity);
        cloud.set_base_color(i, (0.5 + 0.4 * n.array()).matrix());
    }
    return cloud;
}

} // namespace mvdrag
