#include "mvdrag/core/camera.hpp"
#include "mvdrag/core/dragset.hpp"
#include "mvdrag/core/errors.hpp"
#include "mvdrag/core/io.hpp"
#include "mvdrag/core/mesh.hpp"
#include "mvdrag/core/primitives.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <limits>

using namespace mvdrag;

TEST(Camera, OriginProjectsToImageCenterFromEveryRigAzimuth) {
    for (double az : {0.0, 90.0, 180.0, 270.0}) {
        const Camera cam(az, 0.0, 2.5, 50.0, 256);
        const Eigen::Vector3d p = cam.project<double>(Eigen::Vector3d::Zero());
        EXPECT_NEAR(p.x(), 128.0, 1e-9);
        EXPECT_NEAR(p.y(), 128.0, 1e-9);
        EXPECT_NEAR(p.z(), 2.5, 1e-12);
    }
}

TEST(Camera, AzimuthZeroLooksDownNegativeX) {
    const Camera cam;
    EXPECT_TRUE(cam.center().isApprox(Eigen::Vector3d(2.5, 0, 0)));
    // +y is up, so a point above the origin lands in the upper half of the image.
    EXPECT_LT(cam.project<double>(Eigen::Vector3d(0, 0.2, 0)).y(), 128.0);
}

TEST(Camera, UnprojectInvertsProject) {
    const Camera cam(37.0, 12.0, 2.5, 50.0, 128);
    const Eigen::Vector3d w(0.3, -0.2, 0.1);
    const Eigen::Vector3d p = cam.project<double>(w);
    EXPECT_TRUE(cam.unproject(p.x(), p.y(), p.z()).isApprox(w, 1e-12));
}

TEST(Camera, FocalFollowsFieldOfView) {
    const Camera cam(0, 0, 2.5, 90.0, 200);
    EXPECT_NEAR(cam.focal(), 100.0, 1e-9);
    EXPECT_THROW(Camera(0, 0, -1.0, 50.0, 256), ValidationError);
    EXPECT_THROW(Camera(0, 0, 2.5, 0.0, 256), ValidationError);
}

TEST(GaussianPly, SingleGaussianAtOrigin) {
    const auto dir = test::scratch_dir("ply_single");
    GaussianCloud c(1, 0);
    c.positions.setZero();
    c.rotations.row(0) << 1, 0, 0, 0;
    c.log_scales.setConstant(std::log(0.1));
    c.opacity_logits(0) = 2.0;
    c.sh.setZero();
    save_gaussians(c, dir / "one.ply");
    const GaussianCloud r = load_gaussians(dir / "one.ply");
    ASSERT_EQ(r.size(), 1);
    EXPECT_TRUE(r.positions.row(0).isZero());
}

TEST(GaussianPly, RoundTripWithinFloatPrecision) {
    const auto dir = test::scratch_dir("ply_roundtrip");
    GaussianCloud c = test::random_cloud(50, 7);
    c.sh_degree = 2;
    c.sh = Eigen::MatrixXd::Random(50, 27);
    c.view_ids.assign(50, 0);
    for (int i = 0; i < 50; ++i) c.view_ids[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(i % 4);
    save_gaussians(c, dir / "c.ply");
    const GaussianCloud r = load_gaussians(dir / "c.ply");
    ASSERT_EQ(r.size(), c.size());
    EXPECT_EQ(r.sh_degree, 2);
    const double eps = 1e-6;
    EXPECT_LT((r.positions - c.positions).cwiseAbs().maxCoeff(), eps);
    EXPECT_LT((r.rotations - c.rotations).cwiseAbs().maxCoeff(), eps);
    EXPECT_LT((r.log_scales - c.log_scales).cwiseAbs().maxCoeff(), eps);
    EXPECT_LT((r.opacity_logits - c.opacity_logits).cwiseAbs().maxCoeff(), eps);
    EXPECT_LT((r.sh - c.sh).cwiseAbs().maxCoeff(), eps);
    EXPECT_EQ(r.view_ids, c.view_ids);
}

TEST(GaussianPly, EmptyCloudIsValidFile) {
    const auto dir = test::scratch_dir("ply_empty");
    save_gaussians(GaussianCloud(0, 0), dir / "e.ply");
    EXPECT_EQ(load_gaussians(dir / "e.ply").size(), 0);
}

TEST(GaussianPly, QuaternionsAreSavedNormalized) {
    const auto dir = test::scratch_dir("ply_quat");
    GaussianCloud c = test::random_cloud(3, 1);
    c.rotations.row(1) << 2.0, 0.0, 0.0, 0.0;
    save_gaussians(c, dir / "q.ply");
    const GaussianCloud r = load_gaussians(dir / "q.ply");
    EXPECT_NEAR(r.rotations.row(1).norm(), 1.0, 1e-6);
    EXPECT_NEAR(r.rotations(1, 0), 1.0, 1e-6);
}

TEST(GaussianPly, MissingOpacityColumnIsFormatError) {
    const auto dir = test::scratch_dir("ply_missing");
    std::ofstream out(dir / "bad.ply", std::ios::binary);
    out << "ply\nformat binary_little_endian 1.0\nelement vertex 1\n";
    for (const char* n : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1",
                          "rot_2", "rot_3"}) {
        out << "property float " << n << "\n";
    }
    out << "end_header\n";
    const float zeros[13] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0};
    out.write(reinterpret_cast<const char*>(zeros), sizeof zeros);
    out.close();
    EXPECT_THROW(load_gaussians(dir / "bad.ply"), FormatError);
}

TEST(GaussianPly, NanFieldIsDataError) {
    const auto dir = test::scratch_dir("ply_nan");
    GaussianCloud c = test::random_cloud(2, 3);
    save_gaussians(c, dir / "n.ply");
    // Overwrite the first float of the payload (x of Gaussian 0) with NaN.
    std::fstream f(dir / "n.ply", std::ios::in | std::ios::out | std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto pos = text.find("end_header\n") + 11;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    f.seekp(static_cast<std::streamoff>(pos));
    f.write(reinterpret_cast<const char*>(&nan), sizeof nan);
    f.close();
    EXPECT_THROW(load_gaussians(dir / "n.ply"), DataError);
}

TEST(GaussianCloud, NormalizationCentersAndBoundsPositions) {
    GaussianCloud c = test::random_cloud(100, 5, 3.0);
    c.positions.rowwise() += Eigen::RowVector3d(4, -2, 7);
    normalize_to_unit_sphere(c);
    EXPECT_LE(c.positions.rowwise().norm().maxCoeff(), 1.0 + 1e-12);
    EXPECT_LT(c.positions.colwise().mean().norm(), 1e-5);
}

TEST(Mesh, CubeObjHasEightVerticesAndTwelveFaces) {
    const auto dir = test::scratch_dir("cube");
    save_mesh(make_cube_mesh(), dir / "cube.obj");
    const TriMesh m = load_mesh(dir / "cube.obj");
    EXPECT_EQ(m.num_vertices(), 8);
    EXPECT_EQ(m.num_faces(), 12);
}

TEST(Mesh, QuadFacesAreSplitAndBadIndicesRejected) {
    const auto dir = test::scratch_dir("quad");
    {
        std::ofstream out(dir / "quad.obj");
        out << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\nf -4 -3 -2\n";
    }
    const TriMesh m = load_mesh(dir / "quad.obj");
    EXPECT_EQ(m.num_faces(), 3);
    {
        std::ofstream out(dir / "bad.obj");
        out << "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 9\n";
    }
    EXPECT_THROW(load_mesh(dir / "bad.obj"), DataError);
}

TEST(DragSet, OnePairFromJson) {
    const auto j = nlohmann::json::parse(R"({"pairs": [{"source": [0,0,0], "target": [0,0.1,0]}]})");
    const DragSet d = dragset_from_json(j);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_TRUE(d.pairs[0].target.isApprox(Eigen::Vector3d(0, 0.1, 0)));
    EXPECT_EQ(d.frame, DragFrame::Normalized);
}

TEST(DragSet, EmptyPairsFailValidation) {
    EXPECT_THROW(dragset_from_json(nlohmann::json::parse(R"({"pairs": []})")), ValidationError);
    EXPECT_THROW(validate(DragSet{}), ValidationError);
}

TEST(DragSet, MalformedJsonIsFormatError) {
    const auto dir = test::scratch_dir("drag_bad");
    {
        std::ofstream out(dir / "d.json");
        out << "{\"pairs\": [ {\"source\": [0, 0]";
    }
    EXPECT_THROW(load_dragset(dir / "d.json"), FormatError);
    EXPECT_THROW(dragset_from_json(nlohmann::json::parse(R"({"pairs": [{"source": [0,0], "target": [0,0,0]}]})")),
                 FormatError);
}

TEST(DragSet, AssetFrameHandlesFollowNormalization) {
    DragSet d = dragset_from_json(
        nlohmann::json::parse(R"({"frame": "asset", "pairs": [{"source": [3,0,0], "target": [5,0,0]}]})"));
    Normalization n;
    n.center = Eigen::Vector3d(1, 0, 0);
    n.scale = 0.5;
    apply_normalization(d, n);
    EXPECT_TRUE(d.pairs[0].source.isApprox(Eigen::Vector3d(1, 0, 0)));
    EXPECT_TRUE(d.pairs[0].target.isApprox(Eigen::Vector3d(2, 0, 0)));
    EXPECT_EQ(d.frame, DragFrame::Normalized);
}

TEST(DragSet, ProjectionJsonRoundTrip) {
    DragSet d = test::single_pair_projection({10, 20}, {30, 40}, {true, false, true, false});
    d.projections[1][0].source_depth = std::numeric_limits<double>::infinity();
    const DragSet r = projections_from_json(projections_to_json(d, 256));
    ASSERT_TRUE(r.projected());
    EXPECT_EQ(r.projections[2][0].target_px, Eigen::Vector2i(30, 40));
    EXPECT_FALSE(r.projections[1][0].visible);
    EXPECT_TRUE(r.projections[0][0].visible);
}

TEST(Images, PngAndNpyRoundTrip) {
    const auto dir = test::scratch_dir("img");
    MultiViewImageSet set;
    for (int v = 0; v < kNumViews; ++v) {
        ViewImage img(8, 6, 0.5);
        img.rgb.setRandom();
        img.rgb = (img.rgb.array() * 0.5 + 0.5).matrix();
        img.depth.setConstant(2.0 + v);
        img.depth(3) = std::numeric_limits<double>::infinity();
        img.alpha.setConstant(1.0);
        img.alpha(3) = 0.0;
        set.views[static_cast<std::size_t>(v)] = img;
    }
    save_views(set, dir);
    const MultiViewImageSet r = load_views(dir);
    for (int v = 0; v < kNumViews; ++v) {
        const auto& a = set.views[static_cast<std::size_t>(v)];
        const auto& b = r.views[static_cast<std::size_t>(v)];
        EXPECT_LE((a.rgb - b.rgb).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-9);
        EXPECT_TRUE(std::isinf(b.depth(3)));
        EXPECT_FLOAT_EQ(static_cast<float>(b.depth(0)), static_cast<float>(a.depth(0)));
        EXPECT_DOUBLE_EQ(b.alpha(3), 0.0);
    }
}
