#include "mvdrag/render/rig.hpp"

#include "mvdrag/core/errors.hpp"
#include "mvdrag/core/io.hpp"
#include "mvdrag/render/mesh_rasterizer.hpp"
#include "mvdrag/render/rasterizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace mvdrag {

void RigConfig::validate() const {
    for (int i = 0; i < kNumViews; ++i) {
        const double next = azimuths[static_cast<std::size_t>((i + 1) % kNumViews)];
        double step = std::fmod(next - azimuths[static_cast<std::size_t>(i)] + 720.0, 360.0);
        if (std::abs(step - 90.0) > 1e-9) throw ValidationError("rig azimuths must be 90 degrees apart");
    }
    if (resolution <= 0) throw ValidationError("rig resolution must be positive");
}

Camera RigConfig::camera(int view, double phase_deg) const {
    return Camera(azimuths[static_cast<std::size_t>(view)] + phase_deg, elevation, distance, fov_y, resolution);
}

std::array<Camera, kNumViews> RigConfig::cameras(double phase_deg) const {
    return {camera(0, phase_deg), camera(1, phase_deg), camera(2, phase_deg), camera(3, phase_deg)};
}

Asset load_asset(const std::filesystem::path& path, Normalization* normalization) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    Normalization norm;
    Asset asset;
    if (ext == ".ply") {
        GaussianCloud cloud = load_gaussians(path);
        norm = normalize_to_unit_sphere(cloud);
        asset = std::move(cloud);
    } else if (ext == ".obj") {
        TriMesh mesh = load_mesh(path);
        norm = normalize_to_unit_sphere(mesh);
        asset = std::move(mesh);
    } else {
        throw ValidationError("unsupported asset extension '" + ext + "' (expected .ply or .obj)");
    }
    if (normalization) *normalization = norm;
    return asset;
}

ViewImage render_view(const Asset& asset, const Camera& camera, const RenderSettings& settings) {
    if (const auto* cloud = std::get_if<GaussianCloud>(&asset)) return rasterize_gaussians(*cloud, camera, settings);
    return rasterize_mesh(std::get<TriMesh>(asset), camera, settings.background, settings.near_plane);
}

MultiViewImageSet render_rig(const Asset& asset, const RigConfig& rig, const RenderSettings& settings) {
    rig.validate();
    RenderSettings s = settings;
    s.background = rig.background;
    MultiViewImageSet set;
    for (int i = 0; i < kNumViews; ++i) set.views[static_cast<std::size_t>(i)] = render_view(asset, rig.camera(i), s);
    return set;
}

} // namespace mvdrag
