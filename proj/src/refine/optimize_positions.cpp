#include "mvdrag/refine/optimize_positions.hpp"

#include "mvdrag/core/errors.hpp"
#include "mvdrag/render/rasterizer.hpp"

#include <cmath>

namespace mvdrag {

namespace {

RenderSettings with_background(RenderSettings s, const RigConfig& rig) {
    s.background = rig.background;
    return s;
}

void check_targets(const MultiViewImageSet& targets, const RigConfig& rig) {
    validate(targets);
    rig.validate();
    if (targets.width() != rig.resolution || targets.height() != rig.resolution) {
        throw ValidationError("target views do not match the rig resolution");
    }
}

} // namespace

double multiview_loss(const GaussianCloud& cloud, const MultiViewImageSet& targets, const RigConfig& rig,
                      const PerceptualLoss& loss, const RenderSettings& render) {
    check_targets(targets, rig);
    const RenderSettings settings = with_background(render, rig);
    double total = 0.0;
    for (int v = 0; v < kNumViews; ++v) {
        const ViewImage image = rasterize_gaussians(cloud, rig.camera(v), settings);
        total += loss.loss(image, targets.views[static_cast<std::size_t>(v)]);
    }
    return total;
}

DeformResult optimize_positions(const GaussianCloud& cloud, const MultiViewImageSet& targets, const RigConfig& rig,
                                const PerceptualLoss& loss, const DeformOptions& options) {
    validate(cloud);
    check_targets(targets, rig);
    if (!cloud.tagged()) throw ValidationError("deformation needs Gaussians tagged with their source view");
    if (options.iterations < 0 || !(options.lr > 0.0)) throw ValidationError("invalid deformation schedule");

    std::array<std::vector<Eigen::Index>, kNumViews> members;
    for (Eigen::Index i = 0; i < cloud.size(); ++i) members[static_cast<std::size_t>(cloud.view_ids[static_cast<std::size_t>(i)])].push_back(i);
    std::array<Eigen::Matrix<double, Eigen::Dynamic, 3>, kNumViews> base;
    std::vector<DeformationNet> nets;
    for (int v = 0; v < kNumViews; ++v) {
        const auto& idx = members[static_cast<std::size_t>(v)];
        base[static_cast<std::size_t>(v)].resize(static_cast<Eigen::Index>(idx.size()), 3);
        for (std::size_t j = 0; j < idx.size(); ++j) base[static_cast<std::size_t>(v)].row(static_cast<Eigen::Index>(j)) = cloud.positions.row(idx[j]);
        nets.emplace_back(options.bands, options.hidden, options.seed + static_cast<std::uint64_t>(v));
    }

    const RenderSettings settings = with_background(options.render, rig);
    const AdamOptions adam{options.lr};
    DeformResult result;
    result.cloud = cloud;
    result.displacement = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(cloud.size(), 3);
    auto apply = [&] {
        for (int v = 0; v < kNumViews; ++v) {
            const auto& idx = members[static_cast<std::size_t>(v)];
            if (idx.empty()) continue;
            const auto d = nets[static_cast<std::size_t>(v)].displacement(base[static_cast<std::size_t>(v)]);
            for (std::size_t j = 0; j < idx.size(); ++j) {
                result.displacement.row(idx[j]) = d.row(static_cast<Eigen::Index>(j));
                result.cloud.positions.row(idx[j]) = base[static_cast<std::size_t>(v)].row(static_cast<Eigen::Index>(j)) + d.row(static_cast<Eigen::Index>(j));
            }
        }
    };

    double initial = 0.0;
    for (int it = 0; it < options.iterations; ++it) {
        apply();
        Eigen::Matrix<double, Eigen::Dynamic, 3> grad = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(cloud.size(), 3);
        double total = 0.0;
        for (int v = 0; v < kNumViews; ++v) {
            const Camera camera = rig.camera(v);
            RasterTape tape;
            const ViewImage image = rasterize_gaussians(result.cloud, camera, settings, &tape);
            Rgb g;
            total += loss.loss(image, targets.views[static_cast<std::size_t>(v)], &g);
            grad += rasterize_gaussians_backward(result.cloud, camera, settings, tape, g).positions;
        }
        if (it == 0) initial = total;
        if (!std::isfinite(total) || total > 10.0 * initial + 1e-12) {
            throw NumericError("deformation diverged: loss " + std::to_string(total) + " against initial " +
                                   std::to_string(initial),
                               it);
        }
        result.losses.push_back(total);
        if (options.on_iteration) options.on_iteration(it, total);
        for (int v = 0; v < kNumViews; ++v) {
            const auto& idx = members[static_cast<std::size_t>(v)];
            if (idx.empty()) continue;
            Eigen::Matrix<double, Eigen::Dynamic, 3> gv(static_cast<Eigen::Index>(idx.size()), 3);
            for (std::size_t j = 0; j < idx.size(); ++j) gv.row(static_cast<Eigen::Index>(j)) = grad.row(idx[j]);
            auto& net = nets[static_cast<std::size_t>(v)];
            net.adam_step(net.backward(base[static_cast<std::size_t>(v)], gv), adam);
        }
    }
    apply();
    return result;
}

} // namespace mvdrag
