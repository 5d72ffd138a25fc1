#include "mvdrag/reconstruct/reconstruct.hpp"

#include "mvdrag/core/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace mvdrag {

std::array<GaussianCloud, kNumViews> DepthUnprojectionBackend::regress(const MultiViewImageSet& views,
                                                                       const RigConfig& rig) const {
    validate(views);
    rig.validate();
    if (views.width() != rig.resolution || views.height() != rig.resolution) {
        throw ValidationError("rig resolution does not match the views");
    }
    std::array<GaussianCloud, kNumViews> out;
    for (int v = 0; v < kNumViews; ++v) {
        const ViewImage& view = views.views[static_cast<std::size_t>(v)];
        if (!view.has_depth()) throw ValidationError("depth unprojection needs a depth map for every view");
        const Camera camera = rig.camera(v);
        std::vector<Eigen::Index> fg;
        for (Eigen::Index i = 0; i < view.pixels(); ++i) {
            const bool opaque = !view.has_alpha() || view.alpha(i) >= options_.alpha_threshold;
            if (opaque && std::isfinite(view.depth(i)) && view.depth(i) > 0.0) fg.push_back(i);
        }
        GaussianCloud& cloud = out[static_cast<std::size_t>(v)];
        cloud.resize(static_cast<Eigen::Index>(fg.size()), 0);
        cloud.view_ids.assign(fg.size(), static_cast<std::int8_t>(v));
        const Eigen::Vector3d offset = options_.offsets[static_cast<std::size_t>(v)];
        for (std::size_t j = 0; j < fg.size(); ++j) {
            const Eigen::Index i = fg[j];
            const auto n = static_cast<Eigen::Index>(j);
            const double x = static_cast<double>(i % view.width);
            const double y = static_cast<double>(i / view.width);
            const double z = view.depth(i);
            cloud.positions.row(n) = (camera.unproject(x, y, z) + offset).transpose();
            cloud.rotations.row(n) << 1.0, 0.0, 0.0, 0.0;
            cloud.log_scales.row(n).setConstant(std::log(options_.footprint_scale * z / camera.focal()));
            cloud.opacity_logits(n) = logit(options_.opacity);
            cloud.set_base_color(n, view.rgb.row(i).transpose());
        }
    }
    return out;
}

std::unique_ptr<ReconstructorBackend> depth_unprojection_backend(UnprojectionOptions options) {
    return std::make_unique<DepthUnprojectionBackend>(options);
}

GaussianCloud regress_and_fuse(const MultiViewImageSet& views, const RigConfig& rig,
                               const ReconstructorBackend& backend) {
    const auto parts = backend.regress(views, rig);
    GaussianCloud fused;
    fused.view_ids.clear();
    for (int v = 0; v < kNumViews; ++v) {
        GaussianCloud part = parts[static_cast<std::size_t>(v)];
        if (!part.tagged()) part.view_ids.assign(static_cast<std::size_t>(part.size()), static_cast<std::int8_t>(v));
        for (auto id : part.view_ids) {
            if (id != v) throw DataError("reconstructor returned a cloud tagged with the wrong view");
        }
        validate(part);
        if (v == 0) {
            fused = std::move(part);
        } else {
            append(fused, part);
        }
    }
    return fused;
}

namespace {

struct Registry {
    std::mutex mutex;
    std::map<std::string, ReconstructorFactory> factories;
};

Registry& registry() {
    static Registry r;
    return r;
}

} // namespace

void register_reconstructor_adapter(const std::string& name, ReconstructorFactory factory) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.factories[name] = std::move(factory);
}

std::unique_ptr<ReconstructorBackend> make_reconstructor_adapter(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
    ReconstructorFactory factory;
    {
        auto& r = registry();
        std::lock_guard lock(r.mutex);
        const auto it = r.factories.find(name);
        if (it == r.factories.end()) {
            throw ValidationError("no reconstructor adapter named '" + name + "' is registered in this build");
        }
        factory = it->second;
    }
    return factory(args);
}

} // namespace mvdrag
