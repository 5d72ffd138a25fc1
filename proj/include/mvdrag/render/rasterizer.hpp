#pragma once

#include "mvdrag/core/camera.hpp"
#include "mvdrag/core/gaussian_cloud.hpp"
#include "mvdrag/core/image.hpp"
#include "mvdrag/render/splat_projection.hpp"

#include <cstdint>
#include <vector>

namespace mvdrag {

/// Forward-pass record needed by rasterize_gaussians_backward().
///
/// Splats are stored in front-to-back order; each owns a contiguous run of
/// fragments (pixel, alpha, transmittance in front of the splat).
struct RasterTape {
    struct Splat {
        Eigen::Index index;
        ProjectedSplat<double> proj;
        double opacity;
        std::size_t begin;
        std::size_t end;
    };
    struct Fragment {
        std::int32_t pixel;
        double alpha;
        double transmittance;
    };

    int width = 0;
    int height = 0;
    std::vector<Splat> splats;
    std::vector<Fragment> fragments;
};

/// Gradients of a scalar loss w.r.t. the raw cloud parameters.
struct CloudGradient {
    Eigen::Matrix<double, Eigen::Dynamic, 3> positions;
    Eigen::Matrix<double, Eigen::Dynamic, 4> rotations;
    Eigen::Matrix<double, Eigen::Dynamic, 3> log_scales;
    Eigen::VectorXd opacity_logits;
    Eigen::MatrixXd sh;
    /// Screen-space gradient of each splat center in pixels (zero when culled).
    Eigen::Matrix<double, Eigen::Dynamic, 2> means2d;

    CloudGradient() = default;
    explicit CloudGradient(const GaussianCloud& cloud) { reset(cloud); }

    void reset(const GaussianCloud& cloud);
    CloudGradient& operator+=(const CloudGradient& other);
    bool all_finite() const;
};

/// Front-to-back alpha compositing of EWA-projected splats over a flat gray
/// background. Depth is the alpha-weighted mean camera z (+inf where alpha is
/// zero). Throws ValidationError on non-finite parameters.
ViewImage rasterize_gaussians(const GaussianCloud& cloud, const Camera& camera, const RenderSettings& settings = {},
                              RasterTape* tape = nullptr);

/// Backpropagates dL/d(rgb) and optionally dL/d(alpha) through the forward
/// pass recorded in `tape`. Depth carries no gradient.
CloudGradient rasterize_gaussians_backward(const GaussianCloud& cloud, const Camera& camera,
                                           const RenderSettings& settings, const RasterTape& tape, const Rgb& grad_rgb,
                                           const Eigen::VectorXd* grad_alpha = nullptr);

} // namespace mvdrag
