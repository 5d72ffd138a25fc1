#include "mvdrag/core/errors.hpp"
#include "mvdrag/core/primitives.hpp"
#include "mvdrag/reconstruct/reconstruct.hpp"
#include "mvdrag/render/rasterizer.hpp"
#include "mvdrag/render/rig.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace mvdrag;

namespace {

RigConfig rig_at(int res) {
    RigConfig rig;
    rig.resolution = res;
    return rig;
}

MultiViewImageSet empty_views(int res) {
    MultiViewImageSet set;
    for (auto& v : set.views) v = ViewImage(res, res, 0.5);
    return set;
}

int foreground(const ViewImage& v) { return static_cast<int>((v.alpha.array() >= 0.5).count()); }

} // namespace

TEST(Unprojection, OneGaussianPerForegroundPixel) {
    const RigConfig rig = rig_at(48);
    const MultiViewImageSet views = render_rig(Asset(make_cube_mesh(0.4)), rig);
    const GaussianCloud fused = regress_and_fuse(views, rig, DepthUnprojectionBackend());
    int expected = 0;
    for (const auto& v : views.views) expected += foreground(v);
    EXPECT_EQ(fused.size(), expected);
}

TEST(Unprojection, SinglePixelLandsOnItsRay) {
    const RigConfig rig = rig_at(32);
    MultiViewImageSet views = empty_views(32);
    auto& v0 = views.views[0];
    const auto p = v0.index(16, 16);
    v0.alpha(p) = 1.0;
    v0.depth(p) = 2.1;
    v0.rgb.row(p) << 0.9, 0.1, 0.2;
    const auto clouds = DepthUnprojectionBackend().regress(views, rig);
    ASSERT_EQ(clouds[0].size(), 1);
    for (int v = 1; v < kNumViews; ++v) EXPECT_EQ(clouds[static_cast<std::size_t>(v)].size(), 0);
    const Camera cam = rig.camera(0);
    const Eigen::Vector3d x = clouds[0].positions.row(0).transpose();
    EXPECT_NEAR((x - cam.center()).norm(), 2.1, 1e-9);
    EXPECT_NEAR(x.y(), 0.0, 1e-9);
    EXPECT_NEAR(x.z(), 0.0, 1e-9);
    EXPECT_TRUE(clouds[0].base_color(0).isApprox(Eigen::Vector3d(0.9, 0.1, 0.2), 1e-9));
    EXPECT_EQ(clouds[0].view_ids[0], 0);
}

TEST(Unprojection, FlatDiskRendersBackConsistently) {
    const RigConfig rig = rig_at(64);
    MultiViewImageSet views = empty_views(64);
    auto& v0 = views.views[0];
    std::vector<Eigen::Index> disk;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            if ((x - 32) * (x - 32) + (y - 32) * (y - 32) > 15 * 15) continue;
            const auto p = v0.index(x, y);
            v0.alpha(p) = 1.0;
            v0.depth(p) = 2.5;
            v0.rgb.row(p) << 0.8, 0.3, 0.2;
            disk.push_back(p);
        }
    }
    const auto clouds = DepthUnprojectionBackend().regress(views, rig);
    const ViewImage back = rasterize_gaussians(clouds[0], rig.camera(0));
    double err = 0.0;
    for (auto p : disk) err += (back.rgb.row(p) - v0.rgb.row(p)).cwiseAbs().mean();
    EXPECT_LT(err / static_cast<double>(disk.size()), 0.1);
}

TEST(Unprojection, NoForegroundGivesEmptyCloud) {
    const RigConfig rig = rig_at(16);
    EXPECT_EQ(regress_and_fuse(empty_views(16), rig, DepthUnprojectionBackend()).size(), 0);
}

TEST(Unprojection, MissingDepthIsRejected) {
    const RigConfig rig = rig_at(16);
    MultiViewImageSet views = empty_views(16);
    views.views[1].depth.resize(0);
    EXPECT_THROW(DepthUnprojectionBackend().regress(views, rig), ValidationError);
}

TEST(Fusion, ConcatenatesAndPartitionsByView) {
    const RigConfig rig = rig_at(32);
    const MultiViewImageSet views = render_rig(Asset(make_gaussian_sphere(200, 0.7, 0.08)), rig);
    const DepthUnprojectionBackend backend;
    const auto parts = backend.regress(views, rig);
    const GaussianCloud fused = regress_and_fuse(views, rig, backend);
    ASSERT_TRUE(fused.tagged());
    Eigen::Index row = 0;
    for (int v = 0; v < kNumViews; ++v) {
        const auto& part = parts[static_cast<std::size_t>(v)];
        EXPECT_EQ(fused.positions.middleRows(row, part.size()), part.positions);
        EXPECT_EQ(fused.sh.middleRows(row, part.size()), part.sh);
        for (Eigen::Index i = 0; i < part.size(); ++i) EXPECT_EQ(fused.view_ids[static_cast<std::size_t>(row + i)], v);
        row += part.size();
    }
    EXPECT_EQ(row, fused.size());
}

TEST(Fusion, SymmetricSphereGivesRotatedCopies) {
    const RigConfig rig = rig_at(32);
    TriMesh sphere = make_uv_sphere_mesh(0.7, 24, 48);
    sphere.colors.setConstant(0.7);
    const MultiViewImageSet views = render_rig(Asset(sphere), rig);
    const auto parts = DepthUnprojectionBackend().regress(views, rig);
    const Eigen::Matrix3d R = rotation_about_up(90.0);
    for (int v = 1; v < kNumViews; ++v) {
        const auto& a = parts[0];
        const auto& b = parts[static_cast<std::size_t>(v)];
        EXPECT_NEAR(static_cast<double>(a.size()), static_cast<double>(b.size()), 0.02 * a.size());
        const Eigen::RowVector3d ca = a.positions.colwise().mean();
        const Eigen::RowVector3d cb = b.positions.colwise().mean();
        Eigen::Vector3d rotated = ca.transpose();
        for (int k = 0; k < v; ++k) rotated = R * rotated;
        EXPECT_LT((rotated - cb.transpose()).norm(), 0.02);
    }
}

TEST(Fusion, InjectedOffsetsMisalignTheRender) {
    const RigConfig rig = rig_at(32);
    const MultiViewImageSet views = render_rig(Asset(make_gaussian_sphere(200, 0.7, 0.08)), rig);
    UnprojectionOptions opts;
    const GaussianCloud aligned = regress_and_fuse(views, rig, DepthUnprojectionBackend(opts));
    opts.offsets[1] = Eigen::Vector3d(0.05, 0, 0);
    const GaussianCloud shifted = regress_and_fuse(views, rig, DepthUnprojectionBackend(opts));
    const double e0 = (rasterize_gaussians(aligned, rig.camera(0)).rgb - views.views[0].rgb).cwiseAbs().mean();
    const double e1 = (rasterize_gaussians(shifted, rig.camera(0)).rgb - views.views[0].rgb).cwiseAbs().mean();
    EXPECT_GT(e1, e0);
}

TEST(Reconstructor, UnknownAdapterIsRejected) {
    EXPECT_THROW(make_reconstructor_adapter("no-such-model"), ValidationError);
}
