#pragma once

#include "mvdrag/core/gaussian_cloud.hpp"
#include "mvdrag/guidance/backend.hpp"
#include "mvdrag/refine/adam.hpp"
#include "mvdrag/refine/densify.hpp"
#include "mvdrag/refine/perceptual.hpp"
#include "mvdrag/render/rasterizer.hpp"
#include "mvdrag/render/rig.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mvdrag {

struct SplatLearningRates {
    double position = 1.6e-4;
    double sh = 2.5e-3;
    double opacity = 0.05;
    double scale = 5e-3;
    double rotation = 1e-3;
};

struct SDSConfig {
    int iterations = 1000;
    double t_max_start = 0.49;
    double t_max_end = 0.02;
    double t_min = 0.02;
    double cfg_scale = 5.0;
    double lambda_sds = 1.0;
    double lambda_perceptual = 1.0;
    bool densify = true;
    int densify_interval = 100;
    DensifyOptions densify_options;
    /// Cap on the cloud size as a multiple of the starting size, used when
    /// densify_options.max_gaussians is 0.
    double max_growth = 4.0;
    SplatLearningRates lr;
    std::string text;
    std::uint64_t seed = 0;
    RenderSettings render;

    /// Upper bound of the sampled noise level, linear from t_max_start at
    /// iteration 0 to t_max_end at `iterations`.
    double t_max(int iter) const;
    void validate() const;
};

struct SdsStepLog {
    int iteration = 0;
    double t_max = 0.0;
    /// Sampled noise level as a fraction of the schedule and its timestep.
    double t_fraction = 0.0;
    int timestep = 0;
    double phase = 0.0;
    int condition_view = 0;
    double sds_grad_norm = 0.0;
    double perceptual = 0.0;
    Eigen::Index gaussians = 0;
    bool skipped = false;
};

/// w(t) (eps_pred - noise) with w = 1 - abar_t, the latent-space gradient of
/// score distillation for z_t = sqrt(abar) z + sqrt(1 - abar) noise.
LatentStack sds_latent_gradient(const DenoiserBackend& backend, const LatentStack& z, int t,
                                const Eigen::MatrixXd& noise, const Condition& condition, double cfg_scale);

/// Optimizes every Gaussian parameter with score distillation from an
/// image-conditioned multi-view backend, plus a perceptual loss against the
/// edited canonical views, with periodic densify and prune.
class SdsTrainer {
public:
    SdsTrainer(GaussianCloud cloud, MultiViewImageSet edited, RigConfig rig, const DenoiserBackend& backend,
               const PerceptualLoss& loss, SDSConfig config);

    /// One iteration; returns its log entry. Throws NumericError after ten
    /// consecutive non-finite gradients.
    SdsStepLog step();
    int iteration() const { return iteration_; }
    const GaussianCloud& cloud() const { return cloud_; }

private:
    void apply(const CloudGradient& grad);
    void densify_now();

    GaussianCloud cloud_;
    MultiViewImageSet edited_;
    RigConfig rig_;
    const DenoiserBackend& backend_;
    const PerceptualLoss& loss_;
    SDSConfig config_;
    RenderSettings settings_;
    std::mt19937_64 rng_;
    int iteration_ = 0;
    int consecutive_failures_ = 0;
    GradientStats stats_;
    AdamMoments m_pos_, m_rot_, m_scale_, m_opacity_, m_sh_;
};

struct SdsResult {
    GaussianCloud cloud;
    std::vector<SdsStepLog> log;
};

SdsResult refine_sds(const GaussianCloud& cloud, const MultiViewImageSet& edited, const RigConfig& rig,
                     const DenoiserBackend& backend, const PerceptualLoss& loss, const SDSConfig& config);

/// Exact denoiser for a point mass at the renders of a fixed target cloud
/// seen from the condition's poses (the rig cameras when none are given).
class TargetRenderBackend final : public DenoiserBackend {
public:
    TargetRenderBackend(GaussianCloud target, RigConfig rig, NoiseSchedule schedule = NoiseSchedule::scaled_linear(),
                        RenderSettings render = {});

    const NoiseSchedule& schedule() const override { return schedule_; }
    const LatentCodec& codec() const override { return codec_; }
    std::vector<int> feature_strides() const override { return {1}; }
    DenoiserOutput predict(const LatentStack& z, int t, const Condition& y) const override;
    LatentStack feature_vjp(const LatentStack& z, int t, const Condition& y, const FeatureSet& grad) const override;

    MultiViewImageSet target_views(const std::vector<Camera>& poses) const;

private:
    GaussianCloud target_;
    RigConfig rig_;
    NoiseSchedule schedule_;
    RenderSettings render_;
    IdentityCodec codec_;
};

} // namespace mvdrag
