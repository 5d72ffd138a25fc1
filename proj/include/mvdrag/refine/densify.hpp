#pragma once

#include "mvdrag/core/gaussian_cloud.hpp"

#include <vector>

namespace mvdrag {

struct DensifyOptions {
    /// Mean screen-space gradient norm that triggers clone or split.
    double grad_threshold = 2e-4;
    /// Activated opacity below which a Gaussian is removed.
    double prune_opacity = 0.005;
    /// Largest scale above which a candidate is split rather than cloned.
    double split_scale = 0.01;
    /// Upper bound on the cloud size after densification; 0 means none.
    Eigen::Index max_gaussians = 0;
};

/// Running per-Gaussian screen-gradient statistics.
struct GradientStats {
    Eigen::VectorXd accum;
    Eigen::VectorXd count;

    void reset(Eigen::Index n) {
        accum = Eigen::VectorXd::Zero(n);
        count = Eigen::VectorXd::Zero(n);
    }
    /// Adds one observation of the screen-space gradient per visible Gaussian.
    void add(const Eigen::Matrix<double, Eigen::Dynamic, 2>& means2d, const std::vector<bool>& visible);
    Eigen::VectorXd mean() const;
};

struct DensifyResult {
    GaussianCloud cloud;
    /// Row of the input cloud each output row came from.
    std::vector<Eigen::Index> source;
    Eigen::Index cloned = 0;
    Eigen::Index split = 0;
    Eigen::Index pruned = 0;
};

/// Clones small and splits large Gaussians whose mean gradient exceeds the
/// threshold, then prunes near-transparent ones. A split replaces one
/// Gaussian with two placed symmetrically along its largest axis so that
/// the pair keeps the parent's mean and covariance. View tags are inherited.
DensifyResult densify_prune(const GaussianCloud& cloud, const Eigen::VectorXd& mean_grad, const DensifyOptions& options);

} // namespace mvdrag
