#pragma once

#include "mvdrag/core/camera.hpp"
#include "mvdrag/core/dragset.hpp"
#include "mvdrag/core/gaussian_cloud.hpp"
#include "mvdrag/core/image.hpp"
#include "mvdrag/render/splat_projection.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace mvdrag::test {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mvdrag_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Per-pixel compositing written straight from the splatting definition:
/// every Gaussian is tested against every pixel, degree-0 colors only.
inline ViewImage brute_force_render(const GaussianCloud& cloud, const Camera& cam, const RenderSettings& s) {
    ViewImage img(cam.width(), cam.height(), s.background);
    struct Item {
        double z;
        Eigen::Index i;
        Eigen::Vector2d mean;
        Eigen::Matrix2d inv;
        Eigen::Vector3d color;
        double opacity;
    };
    std::vector<Item> items;
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        const Eigen::Vector3d pw = cloud.positions.row(i).transpose();
        const Eigen::Vector3d pc = cam.rotation() * pw + cam.translation();
        if (pc.z() <= s.near_plane) continue;
        Eigen::Quaterniond q(cloud.rotations(i, 0), cloud.rotations(i, 1), cloud.rotations(i, 2), cloud.rotations(i, 3));
        q.normalize();
        const Eigen::Matrix3d R = q.toRotationMatrix();
        const Eigen::Vector3d sc = cloud.log_scales.row(i).array().exp().transpose();
        const Eigen::Matrix3d S = R * sc.cwiseAbs2().asDiagonal() * R.transpose();
        Eigen::Matrix<double, 2, 3> J;
        J << cam.focal() / pc.z(), 0, -cam.focal() * pc.x() / (pc.z() * pc.z()), 0, cam.focal() / pc.z(),
            -cam.focal() * pc.y() / (pc.z() * pc.z());
        Eigen::Matrix2d cov = J * cam.rotation() * S * cam.rotation().transpose() * J.transpose();
        cov += s.low_pass * Eigen::Matrix2d::Identity();
        Item it;
        it.z = pc.z();
        it.i = i;
        it.mean = Eigen::Vector2d(cam.focal() * pc.x() / pc.z() + cam.cx(), cam.focal() * pc.y() / pc.z() + cam.cy());
        it.inv = cov.inverse();
        for (int c = 0; c < 3; ++c) it.color(c) = std::max(0.0, 0.5 + kShC0 * cloud.sh(i, c));
        it.opacity = 1.0 / (1.0 + std::exp(-cloud.opacity_logits(i)));
        items.push_back(it);
    }
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.z < b.z; });
    for (int y = 0; y < cam.height(); ++y) {
        for (int x = 0; x < cam.width(); ++x) {
            double T = 1.0;
            Eigen::Vector3d color = Eigen::Vector3d::Zero();
            for (const auto& it : items) {
                const Eigen::Vector2d d = Eigen::Vector2d(x, y) - it.mean;
                const double power = 0.5 * d.dot(it.inv * d);
                if (power > 0.5 * s.cutoff_sigma * s.cutoff_sigma) continue;
                const double a = it.opacity * std::exp(-power);
                color += T * a * it.color;
                T *= 1.0 - a;
            }
            const auto p = img.index(x, y);
            img.rgb.row(p) = (color + T * Eigen::Vector3d::Constant(s.background)).transpose();
            img.alpha(p) = 1.0 - T;
        }
    }
    return img;
}

/// Small random cloud in front of the default camera.
inline GaussianCloud random_cloud(int n, std::uint64_t seed, double spread = 0.4) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GaussianCloud c(n, 0);
    for (int i = 0; i < n; ++i) {
        c.positions.row(i) << spread * u(rng), spread * u(rng), spread * u(rng);
        Eigen::Vector4d q(1.0 + 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
        c.rotations.row(i) = q.normalized().transpose();
        c.log_scales.row(i) << std::log(0.08 + 0.04 * u(rng)), std::log(0.06 + 0.03 * u(rng)), std::log(0.1 + 0.04 * u(rng));
        c.opacity_logits(i) = 0.5 + u(rng);
        c.sh.row(i) << 0.8 * u(rng), 0.8 * u(rng), 0.8 * u(rng);
    }
    return c;
}

/// Uniform image with a constant RGB value.
inline ViewImage flat_view(int w, int h, double value) {
    ViewImage v(w, h, value);
    v.alpha.setOnes();
    return v;
}

/// A DragSet with one projected pair per view.
inline DragSet single_pair_projection(const Eigen::Vector2i& p, const Eigen::Vector2i& q,
                                      std::array<bool, kNumViews> visible = {true, true, true, true}) {
    DragSet d;
    d.pairs.push_back({Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX()});
    for (int v = 0; v < kNumViews; ++v) {
        ProjectedPair pp;
        pp.view = v;
        pp.source_px = p;
        pp.target_px = q;
        pp.visible = visible[static_cast<std::size_t>(v)];
        d.projections[static_cast<std::size_t>(v)].push_back(pp);
    }
    return d;
}

/// Depth rule evaluated on the exact unit sphere: the rounded pixel's ray is
/// intersected analytically and the handle depth compared with slack.
inline bool sphere_depth_rule_visible(const Camera& cam, const Eigen::Vector3d& p, double eps) {
    const Eigen::Vector3d uvz = cam.project<double>(p);
    if (uvz.z() <= 0.0) return false;
    const long u = std::lround(uvz.x()), v = std::lround(uvz.y());
    if (u < 0 || v < 0 || u >= cam.width() || v >= cam.height()) return false;
    const Eigen::Vector3d o = cam.center();
    const Eigen::Vector3d through = cam.unproject(static_cast<double>(u), static_cast<double>(v), 1.0);
    const Eigen::Vector3d dir = through - o;
    const double a = dir.squaredNorm(), b = 2 * o.dot(dir), c = o.squaredNorm() - 1.0;
    const double disc = b * b - 4 * a * c;
    if (disc < 0.0) return true;
    const double s = (-b - std::sqrt(disc)) / (2 * a);
    return uvz.z() <= s + eps;
}

} // namespace mvdrag::test
