#include "mvdrag/guidance/schedule.hpp"

#include "mvdrag/core/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mvdrag {

NoiseSchedule NoiseSchedule::scaled_linear(int train_steps, double beta_start, double beta_end) {
    if (train_steps < 2) throw ValidationError("noise schedule needs at least two training steps");
    std::vector<double> cumprod(static_cast<std::size_t>(train_steps));
    const double a = std::sqrt(beta_start);
    const double b = std::sqrt(beta_end);
    double prod = 1.0;
    for (int t = 0; t < train_steps; ++t) {
        const double s = a + (b - a) * t / (train_steps - 1);
        prod *= 1.0 - s * s;
        cumprod[static_cast<std::size_t>(t)] = prod;
    }
    return NoiseSchedule(std::move(cumprod));
}

NoiseSchedule::NoiseSchedule(std::vector<double> alphas_cumprod) : alphas_cumprod_(std::move(alphas_cumprod)) {
    if (alphas_cumprod_.empty()) throw ValidationError("noise schedule is empty");
    for (std::size_t t = 0; t < alphas_cumprod_.size(); ++t) {
        const double v = alphas_cumprod_[t];
        if (!(v > 0.0 && v <= 1.0)) throw ValidationError("alpha_bar must lie in (0, 1]");
        if (t > 0 && !(v < alphas_cumprod_[t - 1])) throw ValidationError("alpha_bar must decrease strictly in t");
    }
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t >= train_steps()) throw ValidationError("timestep " + std::to_string(t) + " outside the schedule");
    return alphas_cumprod_[static_cast<std::size_t>(t)];
}

int NoiseSchedule::timestep_at(double fraction) const {
    const int t = static_cast<int>(std::floor(fraction * train_steps()));
    return std::clamp(t, 0, train_steps() - 1);
}

DdimGrid DdimGrid::uniform(const NoiseSchedule& schedule, int steps) {
    if (steps < 1) throw ValidationError("DDIM needs at least one step");
    const int T = schedule.train_steps();
    if (steps > T) throw ValidationError("DDIM steps exceed the training schedule length");
    DdimGrid grid;
    grid.timesteps.push_back(0);
    grid.alpha_bars.push_back(1.0);
    for (int k = 1; k <= steps; ++k) {
        const int t = static_cast<int>((static_cast<long long>(k) * T) / steps) - 1;
        grid.timesteps.push_back(t);
        grid.alpha_bars.push_back(schedule.alpha_bar(t));
    }
    return grid;
}

} // namespace mvdrag
