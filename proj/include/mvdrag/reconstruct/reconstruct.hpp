#pragma once

#include "mvdrag/core/gaussian_cloud.hpp"
#include "mvdrag/core/image.hpp"
#include "mvdrag/render/rig.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mvdrag {

/// Regresses one partial cloud per rig view.
class ReconstructorBackend {
public:
    virtual ~ReconstructorBackend() = default;
    /// Four clouds, the i-th tagged with view_id i.
    virtual std::array<GaussianCloud, kNumViews> regress(const MultiViewImageSet& views, const RigConfig& rig) const = 0;
};

struct UnprojectionOptions {
    /// Pixels with alpha at or above this are foreground.
    double alpha_threshold = 0.5;
    /// Gaussian std as a fraction of the pixel footprint at its depth.
    double footprint_scale = 0.5;
    double opacity = 0.95;
    /// World-space translation applied to each view's cloud.
    std::array<Eigen::Vector3d, kNumViews> offsets{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                                                   Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
};

/// One isotropic Gaussian per foreground pixel, placed at the pixel's
/// unprojected depth and colored by the pixel.
class DepthUnprojectionBackend final : public ReconstructorBackend {
public:
    explicit DepthUnprojectionBackend(UnprojectionOptions options = {}) : options_(options) {}
    std::array<GaussianCloud, kNumViews> regress(const MultiViewImageSet& views, const RigConfig& rig) const override;

private:
    UnprojectionOptions options_;
};

std::unique_ptr<ReconstructorBackend> depth_unprojection_backend(UnprojectionOptions options = {});

/// Concatenates the backend's per-view clouds, keeping their view tags.
GaussianCloud regress_and_fuse(const MultiViewImageSet& views, const RigConfig& rig,
                               const ReconstructorBackend& backend);

using ReconstructorFactory = std::function<std::unique_ptr<ReconstructorBackend>(const std::string& args)>;

void register_reconstructor_adapter(const std::string& name, ReconstructorFactory factory);
/// Throws ValidationError for unknown adapter names.
std::unique_ptr<ReconstructorBackend> make_reconstructor_adapter(const std::string& spec);

} // namespace mvdrag
