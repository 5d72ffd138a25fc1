#pragma once

#include <vector>

namespace mvdrag {

/// Discrete diffusion schedule: alpha_bar(t) = prod_{s <= t} (1 - beta_s).
class NoiseSchedule {
public:
    /// Betas linear in sqrt-space between beta_start and beta_end, as used by
    /// latent diffusion models.
    static NoiseSchedule scaled_linear(int train_steps = 1000, double beta_start = 0.00085, double beta_end = 0.012);

    explicit NoiseSchedule(std::vector<double> alphas_cumprod);

    int train_steps() const { return static_cast<int>(alphas_cumprod_.size()); }
    double alpha_bar(int t) const;
    /// Timestep whose position in [0,1) is `fraction` of the training range.
    int timestep_at(double fraction) const;

private:
    std::vector<double> alphas_cumprod_;
};

/// Uniform DDIM grid with `steps` transitions over levels 0..steps.
/// Level 0 is the clean latent (alpha_bar = 1); the denoiser is queried
/// there with timestep 0. Level k >= 1 uses timestep floor(k T / steps) - 1.
struct DdimGrid {
    std::vector<int> timesteps;
    std::vector<double> alpha_bars;

    static DdimGrid uniform(const NoiseSchedule& schedule, int steps);
    int steps() const { return static_cast<int>(timesteps.size()) - 1; }
};

} // namespace mvdrag
