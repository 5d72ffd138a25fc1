#include "mvdrag/guidance/sampler.hpp"

#include "mvdrag/core/errors.hpp"
#include "mvdrag/guidance/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvdrag {

void GuidanceConfig::validate() const {
    if (ddim_steps < 1) throw ValidationError("ddim_steps must be at least 1");
    if (!(bg_noise_std >= 0.0)) throw ValidationError("bg_noise_std must be non-negative");
    if (inversion_refinements < 0) throw ValidationError("inversion_refinements must be non-negative");
    for (double v : {alpha, beta, eta, cfg_scale}) {
        if (!std::isfinite(v)) throw ValidationError("guidance weights must be finite");
    }
}

nlohmann::json to_json(const GuidanceConfig& c) {
    return {{"alpha", c.alpha},         {"beta", c.beta},
            {"eta", c.eta},             {"cfg_scale", c.cfg_scale},
            {"ddim_steps", c.ddim_steps}, {"bg_noise_std", c.bg_noise_std},
            {"inversion_refinements", c.inversion_refinements}, {"text", c.text}};
}

GuidanceConfig guidance_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("guidance config must be a JSON object");
    GuidanceConfig c;
    try {
        c.alpha = j.value("alpha", c.alpha);
        c.beta = j.value("beta", c.beta);
        c.eta = j.value("eta", c.eta);
        c.cfg_scale = j.value("cfg_scale", c.cfg_scale);
        c.ddim_steps = j.value("ddim_steps", c.ddim_steps);
        c.bg_noise_std = j.value("bg_noise_std", c.bg_noise_std);
        c.inversion_refinements = j.value("inversion_refinements", c.inversion_refinements);
        c.text = j.value("text", c.text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("guidance config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

const double kNegligibleGradient = std::sqrt(std::numeric_limits<double>::epsilon());

} // namespace

GuidedSample guided_sample(const LatentStack& zT, const DenoiserBackend& backend, const GuidanceEnergy* energy,
                           const GuidanceConfig& config, const Condition& condition, const DdimGrid& grid) {
    config.validate();
    GuidedSample out;
    out.latent = zT;
    LatentStack& z = out.latent;
    const bool guided = energy != nullptr && config.eta != 0.0;
    for (int k = grid.steps(); k >= 1; --k) {
        const int t = grid.timesteps[static_cast<std::size_t>(k)];
        DenoiserOutput pred = predict_with_cfg(backend, z, t, condition, config.cfg_scale);
        Eigen::MatrixXd eps = pred.epsilon.data;
        if (guided) {
            const GuidanceContext ctx{backend, condition, k, t, z, pred};
            LatentStack grad;
            StepLog step;
            step.level = k;
            step.timestep = t;
            step.energy = energy->evaluate(ctx, grad);
            if (!std::isfinite(step.energy.total)) throw NumericError("guidance energy is not finite", k);
            if (!grad.data.allFinite()) throw NumericError("guidance gradient is not finite", k);
            step.grad_rms = std::sqrt(grad.data.squaredNorm() / static_cast<double>(grad.data.size()));
            // Gradients at roundoff level carry no direction; unit-RMS scaling would amplify noise.
            const double latent_rms = std::sqrt(z.data.squaredNorm() / static_cast<double>(z.data.size()));
            if (step.grad_rms > kNegligibleGradient * std::max(latent_rms, 1.0)) {
                eps += (config.eta / step.grad_rms) * grad.data;
            }
            out.steps.push_back(step);
        }
        z.data = ddim_step(z.data, eps, grid.alpha_bars[static_cast<std::size_t>(k)],
                           grid.alpha_bars[static_cast<std::size_t>(k - 1)]);
        z.timestep = grid.timesteps[static_cast<std::size_t>(k - 1)];
        if (!z.data.allFinite()) throw NumericError("latent became non-finite", k);
    }
    return out;
}

namespace {

nlohmann::json step_json(const StepLog& s) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"level", s.level},
            {"timestep", s.timestep},
            {"energy", num(s.energy.total)},
            {"energy_edit", num(s.energy.edit)},
            {"energy_content", num(s.energy.content)},
            {"patch_similarity", num(s.energy.similarity)},
            {"grad_rms", num(s.grad_rms)}};
}

} // namespace

DragEditResult drag_edit(const MultiViewImageSet& views, const DragSet& projected, const DenoiserBackend& backend,
                         const GuidanceConfig& config, const Condition& condition, std::uint64_t seed) {
    config.validate();
    const MultiViewImageSet perturbed = perturb_background(views, config.bg_noise_std, seed);
    const Inversion inversion =
        ddim_invert(perturbed, backend, condition, {config.ddim_steps, config.inversion_refinements});
    const EnergyMasks masks = build_masks(projected, layer_shapes(backend.feature_strides(), views.height(), views.width()));
    const DragEnergy energy(inversion.trajectory, masks, config.alpha, config.beta);
    GuidedSample sample = guided_sample(inversion.noise(), backend, &energy, config, condition, inversion.grid);

    MultiViewImageSet decoded = backend.codec().decode(sample.latent);
    for (auto& v : decoded.views) v.rgb = v.rgb.cwiseMax(0.0).cwiseMin(1.0);

    DragEditResult result;
    result.edited = with_colors(views, decoded);
    result.latent = std::move(sample.latent);
    result.log = {{"config", to_json(config)}, {"seed", seed}, {"steps", nlohmann::json::array()}};
    for (const auto& s : sample.steps) result.log["steps"].push_back(step_json(s));
    return result;
}

} // namespace mvdrag
