#include "mvdrag/core/primitives.hpp"
#include "mvdrag/dragproject/project.hpp"
#include "mvdrag/render/rig.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace mvdrag;

namespace {

RigConfig small_rig() {
    RigConfig rig;
    rig.resolution = 128;
    return rig;
}

MultiViewImageSet sphere_views(const RigConfig& rig) {
    return render_rig(Asset(make_uv_sphere_mesh(1.0, 128, 256)), rig);
}

DragSet one_pair(const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
    DragSet d;
    d.pairs.push_back({p, q});
    return d;
}

} // namespace

TEST(ProjectPairs, OriginLandsOnImageCenterInEveryView) {
    RigConfig rig;
    MultiViewImageSet views;
    for (auto& v : views.views) v = test::flat_view(256, 256, 0.5);
    for (auto& v : views.views) v.depth.setConstant(10.0);
    const DragSet d = project_pairs(one_pair(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()), views, rig);
    for (int v = 0; v < kNumViews; ++v) {
        const auto& pp = d.projections[static_cast<std::size_t>(v)][0];
        EXPECT_EQ(pp.source_px, Eigen::Vector2i(128, 128));
        EXPECT_TRUE(pp.visible);
    }
}

TEST(ProjectPairs, SpherePoleVisibleFromFrontAndCulledFromBehind) {
    const RigConfig rig = small_rig();
    const MultiViewImageSet views = sphere_views(rig);
    const DragSet d = project_pairs(one_pair(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0.995, 0.1, 0)), views, rig);
    EXPECT_TRUE(d.projections[0][0].visible);
    EXPECT_FALSE(d.projections[2][0].visible);
}

TEST(ProjectPairs, TargetOutsideFrustumMakesPairInvisible) {
    const RigConfig rig = small_rig();
    const MultiViewImageSet views = sphere_views(rig);
    const DragSet d = project_pairs(one_pair(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(1, 5, 0)), views, rig);
    for (int v = 0; v < kNumViews; ++v) EXPECT_FALSE(d.projections[static_cast<std::size_t>(v)][0].visible);
}

TEST(ProjectPairs, PointBehindCameraIsInvisible) {
    const RigConfig rig = small_rig();
    const MultiViewImageSet views = sphere_views(rig);
    const DragSet d = project_pairs(one_pair(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(3, 0, 0)), views, rig);
    EXPECT_FALSE(d.projections[0][0].visible);
}

TEST(ProjectPairs, VisibilityMatchesAnalyticSphereOracle) {
    const RigConfig rig = small_rig();
    const MultiViewImageSet views = sphere_views(rig);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n;
    DragSet d;
    for (int j = 0; j < 50; ++j) {
        Eigen::Vector3d p(n(rng), n(rng), n(rng));
        p.normalize();
        d.pairs.push_back({p, p});
    }
    const DragSet out = project_pairs(d, views, rig);
    int agree = 0, front = 0, back_culled = 0;
    for (int v = 0; v < kNumViews; ++v) {
        const Camera cam = rig.camera(v);
        for (std::size_t j = 0; j < d.size(); ++j) {
            const Eigen::Vector3d& p = d.pairs[j].source;
            const bool got = out.projections[static_cast<std::size_t>(v)][j].visible;
            agree += test::sphere_depth_rule_visible(cam, p, 0.01) == got;
            if (p.dot(cam.center()) > 1.0) front += got;
            if (p.dot(cam.center()) < 0.0) back_culled += !got;
        }
    }
    EXPECT_EQ(agree, kNumViews * 50);
    EXPECT_GT(front, 0);
    EXPECT_GT(back_culled, 0);
}

TEST(ProjectPairs, VisibleSurfacePointsSitAtRenderedDepth) {
    const RigConfig rig = small_rig();
    const MultiViewImageSet views = sphere_views(rig);
    DragSet d;
    for (double a : {0.0, 0.3, -0.4}) d.pairs.push_back({Eigen::Vector3d(std::cos(a), std::sin(a), 0), Eigen::Vector3d(std::cos(a), 0, std::sin(a))});
    const DragSet out = project_pairs(d, views, rig);
    for (std::size_t j = 0; j < d.size(); ++j) {
        const auto& pp = out.projections[0][j];
        ASSERT_TRUE(pp.visible);
        const auto& img = views.views[0];
        EXPECT_NEAR(pp.source_depth, img.depth(img.index(pp.source_px.x(), pp.source_px.y())), 0.02);
    }
}

TEST(ProjectPairs, RotatingSceneAndHandlesPermutesVisibility) {
    const RigConfig rig = small_rig();
    GaussianCloud c = make_gaussian_sphere(400, 0.8, 0.08);
    c.positions.col(0).array() *= 0.6;
    c.positions.col(0).array() += 0.2;
    DragSet d;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (int j = 0; j < 20; ++j) {
        const Eigen::Vector3d p = c.positions.row(static_cast<Eigen::Index>(rng() % 400)).transpose();
        d.pairs.push_back({p, p + 0.05 * Eigen::Vector3d(n(rng), n(rng), n(rng))});
    }
    const DragSet base = project_pairs(d, render_rig(Asset(c), rig), rig);

    const Eigen::Matrix3d R = rotation_about_up(90.0);
    GaussianCloud rc = c;
    rc.positions = (c.positions * R.transpose()).eval();
    DragSet rd = d;
    for (auto& pr : rd.pairs) {
        pr.source = R * pr.source;
        pr.target = R * pr.target;
    }
    const DragSet rotated = project_pairs(rd, render_rig(Asset(rc), rig), rig);
    int moved = 0;
    for (int v = 0; v < kNumViews; ++v) {
        for (std::size_t j = 0; j < d.size(); ++j) {
            const bool a = base.projections[static_cast<std::size_t>(v)][j].visible;
            const bool b = rotated.projections[static_cast<std::size_t>((v + 1) % kNumViews)][j].visible;
            moved += a == b;
        }
    }
    EXPECT_EQ(moved, kNumViews * static_cast<int>(d.size()));
}
