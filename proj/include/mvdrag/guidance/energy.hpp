#pragma once

#include "mvdrag/guidance/backend.hpp"
#include "mvdrag/guidance/masks.hpp"

namespace mvdrag {

/// Sum over views of the layer-averaged 1 / (0.5 cos + 0.5), where cos
/// compares the flattened edited features at the edit cells with the
/// original features at the matching origin cells. Views without mask cells
/// contribute 0. When `grad` is non-null it receives dE/dF_edi; F_ori is
/// treated as a constant.
double energy_edit(const FeatureSet& edited, const FeatureSet& original, const EnergyMasks& masks,
                   FeatureSet* grad = nullptr);

/// Same form over the unedited cells of both branches.
double energy_content(const FeatureSet& edited, const FeatureSet& original, const EnergyMasks& masks,
                      FeatureSet* grad = nullptr);

/// Mean cosine between edited target patches and original source patches
/// over views and layers with mask cells; NaN when no view has any.
double patch_similarity(const FeatureSet& edited, const FeatureSet& original, const EnergyMasks& masks);

/// Everything an energy may look at during one sampling step.
struct GuidanceContext {
    const DenoiserBackend& backend;
    const Condition& condition;
    /// Grid level and timestep of the current latent.
    int level;
    int timestep;
    const LatentStack& latent;
    const DenoiserOutput& prediction;
};

struct EnergyTerms {
    double total = 0.0;
    double edit = 0.0;
    double content = 0.0;
    double similarity = 0.0;
};

/// A differentiable objective over the edited latent.
class GuidanceEnergy {
public:
    virtual ~GuidanceEnergy() = default;
    /// Evaluates the energy and writes dE/dz into `grad` (same shape as the latent).
    virtual EnergyTerms evaluate(const GuidanceContext& ctx, LatentStack& grad) const = 0;
};

/// alpha E_edit + beta E_content against the cached original trajectory.
class DragEnergy final : public GuidanceEnergy {
public:
    DragEnergy(const std::vector<LatentStack>& original_trajectory, EnergyMasks masks, double alpha, double beta);
    EnergyTerms evaluate(const GuidanceContext& ctx, LatentStack& grad) const override;

private:
    const std::vector<LatentStack>& trajectory_;
    EnergyMasks masks_;
    double alpha_;
    double beta_;
};

/// ||z - target||^2 on the latent itself.
class QuadraticEnergy final : public GuidanceEnergy {
public:
    explicit QuadraticEnergy(LatentStack target) : target_(std::move(target)) {}
    EnergyTerms evaluate(const GuidanceContext& ctx, LatentStack& grad) const override;

private:
    LatentStack target_;
};

} // namespace mvdrag
