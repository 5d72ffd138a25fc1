#pragma once

#include "mvdrag/guidance/backend.hpp"

#include <vector>

namespace mvdrag {

/// Isotropic Gaussian mixture over whole latent stacks.
struct MixtureModel {
    std::vector<LatentStack> means;
    std::vector<double> weights;
    std::vector<double> sigmas;
};

struct MixtureBackendOptions {
    /// Strides of the advertised feature layers. Stride 1 is the latent
    /// itself; larger strides are average-pooled copies.
    std::vector<int> feature_strides{1};
    /// Cross-view feature mixing: F_v = (1 - lambda) z_v + lambda mean_w(z_w).
    double view_mixing = 0.0;
};

/// Exact denoiser for a Gaussian mixture diffused under `schedule`:
/// eps(z, t) = -sqrt(1 - abar_t) * grad log p_t(z). Conditions are ignored.
class MixtureBackend final : public DenoiserBackend {
public:
    MixtureBackend(MixtureModel model, NoiseSchedule schedule, MixtureBackendOptions options = {});

    const NoiseSchedule& schedule() const override { return schedule_; }
    const LatentCodec& codec() const override { return codec_; }
    std::vector<int> feature_strides() const override { return options_.feature_strides; }

    DenoiserOutput predict(const LatentStack& z, int t, const Condition& y) const override;
    LatentStack feature_vjp(const LatentStack& z, int t, const Condition& y, const FeatureSet& grad) const override;

    /// grad_z log p_t(z) at noise level abar.
    LatentStack score(const LatentStack& z, double alpha_bar) const;
    /// Normalized log p_t(z).
    double log_density(const LatentStack& z, double alpha_bar) const;

    FeatureSet features(const LatentStack& z) const;
    const MixtureModel& model() const { return model_; }

private:
    MixtureModel model_;
    NoiseSchedule schedule_;
    MixtureBackendOptions options_;
    IdentityCodec codec_;
};

/// Throws ValidationError for empty mixtures, mismatched shapes, non-positive
/// weights or sigmas.
MixtureBackend analytic_mixture_backend(MixtureModel model, NoiseSchedule schedule = NoiseSchedule::scaled_linear(),
                                        MixtureBackendOptions options = {});

/// The backend used for hermetic drag edits: a single component centered on
/// `latents` with spread `sigma`, features mixed across views by `view_mixing`.
MixtureBackend toy_backend(const LatentStack& latents, double sigma = 0.5, double view_mixing = 0.25);

/// Average-pools one view-stacked (4 h w) x c map by `stride`.
Eigen::MatrixXd pool_views(const Eigen::MatrixXd& data, int height, int width, int stride);
/// Adjoint of pool_views.
Eigen::MatrixXd unpool_views(const Eigen::MatrixXd& pooled, int height, int width, int stride);

} // namespace mvdrag
