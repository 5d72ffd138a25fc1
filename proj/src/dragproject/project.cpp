#include "mvdrag/dragproject/project.hpp"

#include "mvdrag/core/errors.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace mvdrag {

namespace {

struct Endpoint {
    Eigen::Vector2i pixel;
    double depth;
    bool in_frame;
};

Endpoint project_point(const Camera& camera, const Eigen::Vector3d& world, double near_plane) {
    const Eigen::Vector3d p = camera.project<double>(world);
    Endpoint e{Eigen::Vector2i::Zero(), p.z(), false};
    if (!(p.z() > near_plane)) return e;
    e.pixel = Eigen::Vector2i(static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())));
    e.in_frame = e.pixel.x() >= 0 && e.pixel.y() >= 0 && e.pixel.x() < camera.width() && e.pixel.y() < camera.height();
    return e;
}

} // namespace

DragSet project_pairs(const DragSet& drags, const MultiViewImageSet& views, const RigConfig& rig,
                      const ProjectionOptions& options) {
    validate(drags);
    validate(views);
    rig.validate();
    if (views.width() != rig.resolution || views.height() != rig.resolution) {
        throw ValidationError("rig resolution does not match the rendered views");
    }
    for (const auto& v : views.views) {
        if (!v.has_depth()) throw ValidationError("drag projection needs depth maps for every view");
    }

    const double eps = options.depth_tolerance * options.scene_radius;
    DragSet out = drags;
    for (int i = 0; i < kNumViews; ++i) {
        const Camera camera = rig.camera(i);
        const ViewImage& view = views.views[static_cast<std::size_t>(i)];
        auto& projected = out.projections[static_cast<std::size_t>(i)];
        projected.clear();
        for (const auto& pair : drags.pairs) {
            const Endpoint p = project_point(camera, pair.source, 0.0);
            const Endpoint q = project_point(camera, pair.target, 0.0);
            ProjectedPair pp;
            pp.view = i;
            pp.source_px = p.pixel;
            pp.target_px = q.pixel;
            pp.source_depth = p.depth;
            pp.target_depth = q.depth;
            auto passes = [&](const Endpoint& e) {
                return e.in_frame && e.depth <= view.depth(view.index(e.pixel.x(), e.pixel.y())) + eps;
            };
            pp.visible = passes(p) && passes(q);
            projected.push_back(pp);
        }
    }

    const auto anywhere = out.visible_anywhere();
    for (std::size_t j = 0; j < anywhere.size(); ++j) {
        if (!anywhere[j]) spdlog::warn("drag pair {} is occluded or out of frame in all four views; it is ignored", j);
    }
    return out;
}

} // namespace mvdrag
