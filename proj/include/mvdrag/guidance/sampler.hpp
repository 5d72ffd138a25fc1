#pragma once

#include "mvdrag/core/dragset.hpp"
#include "mvdrag/guidance/ddim.hpp"
#include "mvdrag/guidance/energy.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mvdrag {

struct GuidanceConfig {
    double alpha = 8.0;
    double beta = 4.0;
    double eta = 1.0;
    double cfg_scale = 5.0;
    int ddim_steps = 150;
    double bg_noise_std = 0.01;
    int inversion_refinements = 3;
    std::string text;

    /// Throws ValidationError on out-of-range fields.
    void validate() const;
};

nlohmann::json to_json(const GuidanceConfig& config);
GuidanceConfig guidance_config_from_json(const nlohmann::json& j);

struct StepLog {
    int level = 0;
    int timestep = 0;
    EnergyTerms energy;
    double grad_rms = 0.0;
};

struct GuidedSample {
    LatentStack latent;
    std::vector<StepLog> steps;
};

/// DDIM sampling from z_T where each noise prediction is shifted by
/// eta * g / rms(g), g = dE/dz of `energy`. A null energy or eta = 0 gives
/// plain sampling. Throws NumericError with the grid level on non-finite
/// energies, gradients or latents.
GuidedSample guided_sample(const LatentStack& zT, const DenoiserBackend& backend, const GuidanceEnergy* energy,
                           const GuidanceConfig& config, const Condition& condition, const DdimGrid& grid);

struct DragEditResult {
    MultiViewImageSet edited;
    LatentStack latent;
    nlohmann::json log;
};

/// Perturbs the background, inverts, and samples under the drag energy.
/// Edited views keep the depth and alpha planes of `views`.
DragEditResult drag_edit(const MultiViewImageSet& views, const DragSet& projected, const DenoiserBackend& backend,
                         const GuidanceConfig& config, const Condition& condition, std::uint64_t seed);

} // namespace mvdrag
