#include "mvdrag/render/mesh_rasterizer.hpp"

#include <algorithm>
#include <cmath>

namespace mvdrag {

ViewImage rasterize_mesh(const TriMesh& mesh, const Camera& camera, double background, double near_plane) {
    ViewImage image(camera.width(), camera.height(), background);
    const Eigen::Vector3d default_color = Eigen::Vector3d::Constant(0.8);

    for (Eigen::Index f = 0; f < mesh.num_faces(); ++f) {
        Eigen::Vector3d screen[3];
        Eigen::Vector3d color[3];
        bool clipped = false;
        for (int k = 0; k < 3; ++k) {
            const int vi = mesh.faces(f, k);
            screen[k] = camera.project<double>(mesh.vertices.row(vi).transpose());
            color[k] = mesh.has_colors() ? Eigen::Vector3d(mesh.colors.row(vi).transpose()) : default_color;
            clipped = clipped || !(screen[k].z() > near_plane);
        }
        if (clipped) continue;

        const Eigen::Vector2d a = screen[0].head<2>(), b = screen[1].head<2>(), c = screen[2].head<2>();
        const double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        if (std::abs(area) < 1e-12) continue;

        const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}))));
        const int x1 = std::min(image.width - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}))));
        const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}))));
        const int y1 = std::min(image.height - 1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}))));

        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Eigen::Vector2d p(x, y);
                auto edge = [&](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
                    return ((v - u).x() * (p - u).y() - (v - u).y() * (p - u).x()) / area;
                };
                const double w0 = edge(b, c), w1 = edge(c, a), w2 = edge(a, b);
                if (w0 < -1e-12 || w1 < -1e-12 || w2 < -1e-12) continue;
                const double inv_z = w0 / screen[0].z() + w1 / screen[1].z() + w2 / screen[2].z();
                const double z = 1.0 / inv_z;
                const Eigen::Index pix = image.index(x, y);
                if (!(z < image.depth(pix))) continue;
                image.depth(pix) = z;
                image.alpha(pix) = 1.0;
                const Eigen::Vector3d rgb =
                    z * (w0 * color[0] / screen[0].z() + w1 * color[1] / screen[1].z() + w2 * color[2] / screen[2].z());
                image.rgb.row(pix) = rgb.transpose();
            }
        }
    }
    return image;
}

} // namespace mvdrag
