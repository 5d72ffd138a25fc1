#pragma once

#include "mvdrag/core/gaussian_cloud.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <filesystem>

namespace mvdrag {

struct TriMesh {
    Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;
    Eigen::Matrix<int, Eigen::Dynamic, 3> faces;
    /// Either empty or one RGB row per vertex, values in [0,1].
    Eigen::Matrix<double, Eigen::Dynamic, 3> colors;

    Eigen::Index num_vertices() const { return vertices.rows(); }
    Eigen::Index num_faces() const { return faces.rows(); }
    bool has_colors() const { return colors.rows() == vertices.rows() && colors.rows() > 0; }
    bool empty() const { return faces.rows() == 0; }
};

/// Drops faces with repeated indices or zero area; throws DataError on
/// out-of-range indices.
void clean_faces(TriMesh& mesh);

/// Reads `v x y z [r g b]` and `f a b c ...` records (polygons are fan-split;
/// `a/b/c` index forms accepted, negative indices resolved). Not normalized.
TriMesh load_mesh(const std::filesystem::path& path);

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

Normalization normalize_to_unit_sphere(TriMesh& mesh);

} // namespace mvdrag
