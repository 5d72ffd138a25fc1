#pragma once

#include "mvdrag/core/gaussian_cloud.hpp"
#include "mvdrag/core/image.hpp"
#include "mvdrag/refine/deformation.hpp"
#include "mvdrag/refine/perceptual.hpp"
#include "mvdrag/render/rig.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace mvdrag {

struct DeformOptions {
    int iterations = 2000;
    double lr = 1e-5;
    int bands = 6;
    int hidden = 64;
    std::uint64_t seed = 0;
    RenderSettings render;
    /// Called after every iteration with (iteration, loss).
    std::function<void(int, double)> on_iteration;
};

struct DeformResult {
    GaussianCloud cloud;
    /// Final per-Gaussian displacement.
    Eigen::Matrix<double, Eigen::Dynamic, 3> displacement;
    /// Summed loss before each update.
    std::vector<double> losses;
};

/// Sum over views of loss(render_i, target_i).
double multiview_loss(const GaussianCloud& cloud, const MultiViewImageSet& targets, const RigConfig& rig,
                      const PerceptualLoss& loss, const RenderSettings& render = {});

/// Trains one DeformationNet per view tag jointly with Adam, moving each
/// Gaussian by its own view's net. Only positions change. Throws
/// NumericError if the loss exceeds ten times its initial value.
DeformResult optimize_positions(const GaussianCloud& cloud, const MultiViewImageSet& targets, const RigConfig& rig,
                                const PerceptualLoss& loss, const DeformOptions& options = {});

} // namespace mvdrag
