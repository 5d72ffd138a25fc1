#include "mvdrag/refine/sds.hpp"

#include "mvdrag/core/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace mvdrag {

double SDSConfig::t_max(int iter) const {
    const double f = std::clamp(static_cast<double>(iter) / std::max(iterations, 1), 0.0, 1.0);
    return (1.0 - f) * t_max_start + f * t_max_end;
}

void SDSConfig::validate() const {
    if (iterations < 0) throw ValidationError("SDS iterations must be non-negative");
    if (!(t_min > 0.0 && t_min < 1.0)) throw ValidationError("t_min must lie in (0, 1)");
    if (!(t_max_start <= 1.0 && t_max_end >= t_min && t_max_start >= t_max_end)) {
        throw ValidationError("T_max schedule must be non-increasing and stay at or above t_min");
    }
    if (densify && densify_interval < 1) throw ValidationError("densify interval must be positive");
    if (!(max_growth >= 1.0)) throw ValidationError("max_growth must be at least 1");
}

LatentStack sds_latent_gradient(const DenoiserBackend& backend, const LatentStack& z, int t,
                                const Eigen::MatrixXd& noise, const Condition& condition, double cfg_scale) {
    const double ab = backend.schedule().alpha_bar(t);
    LatentStack zt = z;
    zt.data = std::sqrt(ab) * z.data + std::sqrt(1.0 - ab) * noise;
    zt.timestep = t;
    LatentStack grad = predict_with_cfg(backend, zt, t, condition, cfg_scale).epsilon;
    grad.data = (1.0 - ab) * (grad.data - noise);
    return grad;
}

SdsTrainer::SdsTrainer(GaussianCloud cloud, MultiViewImageSet edited, RigConfig rig, const DenoiserBackend& backend,
                       const PerceptualLoss& loss, SDSConfig config)
    : cloud_(std::move(cloud)), edited_(std::move(edited)), rig_(std::move(rig)), backend_(backend), loss_(loss),
      config_(std::move(config)), rng_(config_.seed) {
    config_.validate();
    validate(cloud_);
    validate(edited_);
    rig_.validate();
    if (edited_.width() != rig_.resolution) throw ValidationError("edited views do not match the rig resolution");
    settings_ = config_.render;
    settings_.background = rig_.background;
    stats_.reset(cloud_.size());
    if (config_.densify_options.max_gaussians == 0) {
        config_.densify_options.max_gaussians =
            std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(config_.max_growth * static_cast<double>(cloud_.size()))));
    }
}

namespace {

std::vector<bool> splats_in_tape(const RasterTape& tape, Eigen::Index n) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& s : tape.splats) seen[static_cast<std::size_t>(s.index)] = true;
    return seen;
}

} // namespace

SdsStepLog SdsTrainer::step() {
    SdsStepLog log;
    log.iteration = iteration_;
    log.t_max = config_.t_max(iteration_);
    std::uniform_real_distribution<double> phase_dist(0.0, 90.0);
    std::uniform_int_distribution<int> view_dist(0, kNumViews - 1);
    std::uniform_real_distribution<double> t_dist(config_.t_min, log.t_max);
    std::normal_distribution<double> normal(0.0, 1.0);
    log.phase = phase_dist(rng_);
    log.condition_view = view_dist(rng_);
    log.t_fraction = log.t_max > config_.t_min ? t_dist(rng_) : config_.t_min;
    const int T = backend_.schedule().train_steps();
    log.timestep = std::clamp(static_cast<int>(std::lround(log.t_fraction * T)),
                              static_cast<int>(std::ceil(config_.t_min * T - 1e-9)),
                              static_cast<int>(std::floor(log.t_max * T + 1e-9)));
    log.timestep = std::min(log.timestep, T - 1);

    CloudGradient grad(cloud_);
    const auto cameras = rig_.cameras(log.phase);

    if (config_.lambda_sds != 0.0) {
        MultiViewImageSet renders;
        std::array<RasterTape, kNumViews> tapes;
        for (int v = 0; v < kNumViews; ++v) {
            renders.views[static_cast<std::size_t>(v)] =
                rasterize_gaussians(cloud_, cameras[static_cast<std::size_t>(v)], settings_, &tapes[static_cast<std::size_t>(v)]);
        }
        const LatentStack z = backend_.codec().encode(renders);
        Eigen::MatrixXd noise(z.data.rows(), z.data.cols());
        for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng_);
        Condition condition;
        condition.text = config_.text;
        condition.image = edited_.views[static_cast<std::size_t>(log.condition_view)];
        condition.poses.assign(cameras.begin(), cameras.end());
        LatentStack g = sds_latent_gradient(backend_, z, log.timestep, noise, condition, config_.cfg_scale);
        g.data *= config_.lambda_sds;
        log.sds_grad_norm = g.data.norm();
        const auto rgb_grads = backend_.codec().encode_vjp(renders, g);
        for (int v = 0; v < kNumViews; ++v) {
            const auto& tape = tapes[static_cast<std::size_t>(v)];
            CloudGradient gv = rasterize_gaussians_backward(cloud_, cameras[static_cast<std::size_t>(v)], settings_, tape,
                                                            rgb_grads[static_cast<std::size_t>(v)]);
            stats_.add(gv.means2d, splats_in_tape(tape, cloud_.size()));
            grad += gv;
        }
    }

    if (config_.lambda_perceptual != 0.0) {
        for (int v = 0; v < kNumViews; ++v) {
            const Camera camera = rig_.camera(v);
            RasterTape tape;
            const ViewImage image = rasterize_gaussians(cloud_, camera, settings_, &tape);
            Rgb g;
            log.perceptual += loss_.loss(image, edited_.views[static_cast<std::size_t>(v)], &g);
            g *= config_.lambda_perceptual;
            CloudGradient gv = rasterize_gaussians_backward(cloud_, camera, settings_, tape, g);
            stats_.add(gv.means2d, splats_in_tape(tape, cloud_.size()));
            grad += gv;
        }
    }

    if (!grad.all_finite() || !std::isfinite(log.perceptual)) {
        log.skipped = true;
        ++consecutive_failures_;
        spdlog::warn("SDS iteration {}: non-finite gradient, step skipped", iteration_);
        if (consecutive_failures_ >= 10) throw NumericError("ten consecutive non-finite SDS gradients", iteration_);
    } else {
        consecutive_failures_ = 0;
        apply(grad);
    }

    ++iteration_;
    if (config_.densify && iteration_ % config_.densify_interval == 0 && iteration_ < config_.iterations) densify_now();
    log.gaussians = cloud_.size();
    return log;
}

void SdsTrainer::apply(const CloudGradient& grad) {
    adam_update(cloud_.positions, grad.positions, m_pos_, {config_.lr.position});
    adam_update(cloud_.rotations, grad.rotations, m_rot_, {config_.lr.rotation});
    adam_update(cloud_.log_scales, grad.log_scales, m_scale_, {config_.lr.scale});
    adam_update(cloud_.opacity_logits, grad.opacity_logits, m_opacity_, {config_.lr.opacity});
    adam_update(cloud_.sh, grad.sh, m_sh_, {config_.lr.sh});
    normalize_rotations(cloud_);
}

void SdsTrainer::densify_now() {
    DensifyResult r = densify_prune(cloud_, stats_.mean(), config_.densify_options);
    if (r.cloned + r.split + r.pruned > 0) {
        spdlog::debug("densify at iteration {}: {} cloned, {} split, {} pruned", iteration_, r.cloned, r.split, r.pruned);
    }
    for (AdamMoments* m : {&m_pos_, &m_rot_, &m_scale_, &m_opacity_, &m_sh_}) {
        if (m->m.rows() == cloud_.size()) m->gather_rows(r.source);
    }
    cloud_ = std::move(r.cloud);
    stats_.reset(cloud_.size());
}

SdsResult refine_sds(const GaussianCloud& cloud, const MultiViewImageSet& edited, const RigConfig& rig,
                     const DenoiserBackend& backend, const PerceptualLoss& loss, const SDSConfig& config) {
    SdsTrainer trainer(cloud, edited, rig, backend, loss, config);
    SdsResult result;
    for (int i = 0; i < config.iterations; ++i) result.log.push_back(trainer.step());
    result.cloud = trainer.cloud();
    return result;
}

TargetRenderBackend::TargetRenderBackend(GaussianCloud target, RigConfig rig, NoiseSchedule schedule,
                                         RenderSettings render)
    : target_(std::move(target)), rig_(std::move(rig)), schedule_(std::move(schedule)), render_(render) {
    validate(target_);
    rig_.validate();
    render_.background = rig_.background;
}

MultiViewImageSet TargetRenderBackend::target_views(const std::vector<Camera>& poses) const {
    MultiViewImageSet out;
    for (int v = 0; v < kNumViews; ++v) {
        const Camera camera = poses.size() == kNumViews ? poses[static_cast<std::size_t>(v)] : rig_.camera(v);
        out.views[static_cast<std::size_t>(v)] = rasterize_gaussians(target_, camera, render_);
    }
    return out;
}

DenoiserOutput TargetRenderBackend::predict(const LatentStack& z, int t, const Condition& y) const {
    if (!y.poses.empty() && y.poses.size() != kNumViews) throw ValidationError("condition must carry four poses");
    const LatentStack target = codec_.encode(target_views(y.poses));
    if (!target.same_shape(z)) throw ValidationError("latent shape does not match the target renders");
    const double ab = schedule_.alpha_bar(t);
    DenoiserOutput out;
    out.epsilon = z;
    out.epsilon.timestep = t;
    out.epsilon.data = (z.data - std::sqrt(ab) * target.data) / std::sqrt(1.0 - ab);
    FeatureMap layer;
    layer.height = z.height;
    layer.width = z.width;
    layer.data = z.data;
    out.features.push_back(std::move(layer));
    return out;
}

LatentStack TargetRenderBackend::feature_vjp(const LatentStack& z, int, const Condition&, const FeatureSet& grad) const {
    if (grad.size() != 1) throw ValidationError("feature gradient has the wrong layer count");
    LatentStack out = z;
    out.data = grad[0].data;
    return out;
}

} // namespace mvdrag
