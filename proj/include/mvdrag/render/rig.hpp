#pragma once

#include "mvdrag/core/camera.hpp"
#include "mvdrag/core/gaussian_cloud.hpp"
#include "mvdrag/core/image.hpp"
#include "mvdrag/core/mesh.hpp"
#include "mvdrag/render/splat_projection.hpp"

#include <array>
#include <filesystem>
#include <variant>

namespace mvdrag {

/// The four-camera orbit rig: orthogonal azimuths at a fixed elevation.
struct RigConfig {
    std::array<double, kNumViews> azimuths{0.0, 90.0, 180.0, 270.0};
    double elevation = 0.0;
    int resolution = 256;
    double background = 0.5;
    double distance = 2.5;
    double fov_y = 50.0;

    /// Throws ValidationError unless the azimuths are 90 degrees apart.
    void validate() const;

    Camera camera(int view, double phase_deg = 0.0) const;
    /// Cameras at azimuths + phase, e.g. the randomized views used during refinement.
    std::array<Camera, kNumViews> cameras(double phase_deg = 0.0) const;
};

using Asset = std::variant<GaussianCloud, TriMesh>;

/// Loads `.ply` as Gaussians and `.obj` as a mesh, then normalizes to the
/// unit sphere. The applied transform is written to `normalization`.
Asset load_asset(const std::filesystem::path& path, Normalization* normalization = nullptr);

ViewImage render_view(const Asset& asset, const Camera& camera, const RenderSettings& settings = {});

/// Renders the asset from all four rig cameras, views in azimuth order.
MultiViewImageSet render_rig(const Asset& asset, const RigConfig& rig, const RenderSettings& settings = {});

} // namespace mvdrag
