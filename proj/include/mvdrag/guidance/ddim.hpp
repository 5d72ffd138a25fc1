#pragma once

#include "mvdrag/guidance/backend.hpp"

#include <vector>

namespace mvdrag {

/// Deterministic DDIM update from noise level `from` to level `to` given a
/// noise prediction. Works in both directions.
Eigen::MatrixXd ddim_step(const Eigen::MatrixXd& z, const Eigen::MatrixXd& epsilon, double alpha_bar_from,
                          double alpha_bar_to);

struct InversionOptions {
    int steps = 150;
    /// Fixed-point refinements of each inversion step; 0 gives the plain
    /// explicit scheme that reuses the prediction at the lower level.
    int refinements = 3;
};

/// z at every grid level; trajectory[0] is the clean latent and
/// trajectory.back() is z_T.
struct Inversion {
    DdimGrid grid;
    std::vector<LatentStack> trajectory;

    const LatentStack& noise() const { return trajectory.back(); }
};

/// Runs the sampling ODE backward from clean latents. Throws NumericError
/// naming the timestep if a latent becomes non-finite.
Inversion ddim_invert(const LatentStack& z0, const DenoiserBackend& backend, const Condition& y,
                      const InversionOptions& options = {});

/// Encodes `images` with the backend codec, then inverts.
Inversion ddim_invert(const MultiViewImageSet& images, const DenoiserBackend& backend, const Condition& y,
                      const InversionOptions& options = {});

/// Plain DDIM sampling from z_T down to level 0 on `grid`.
LatentStack ddim_sample(const LatentStack& zT, const DenoiserBackend& backend, const Condition& y, const DdimGrid& grid,
                        double cfg_scale = 1.0);

} // namespace mvdrag
