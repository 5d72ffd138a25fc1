#include "mvdrag/guidance/ddim.hpp"

#include "mvdrag/core/errors.hpp"

#include <cmath>

namespace mvdrag {

Eigen::MatrixXd ddim_step(const Eigen::MatrixXd& z, const Eigen::MatrixXd& epsilon, double alpha_bar_from,
                          double alpha_bar_to) {
    const double a = std::sqrt(alpha_bar_from);
    const double b = std::sqrt(alpha_bar_to);
    const Eigen::MatrixXd x0 = (z - std::sqrt(1.0 - alpha_bar_from) * epsilon) / a;
    return b * x0 + std::sqrt(1.0 - alpha_bar_to) * epsilon;
}

namespace {

void check_finite(const LatentStack& z, int t) {
    if (!z.data.allFinite()) throw NumericError("latent became non-finite at timestep " + std::to_string(t), t);
}

} // namespace

Inversion ddim_invert(const LatentStack& z0, const DenoiserBackend& backend, const Condition& y,
                      const InversionOptions& options) {
    if (options.refinements < 0) throw ValidationError("inversion refinements must be non-negative");
    Inversion inv;
    inv.grid = DdimGrid::uniform(backend.schedule(), options.steps);
    check_finite(z0, 0);
    inv.trajectory.reserve(static_cast<std::size_t>(options.steps) + 1);
    inv.trajectory.push_back(z0);
    inv.trajectory.back().timestep = 0;
    for (int k = 0; k < options.steps; ++k) {
        const LatentStack& z = inv.trajectory.back();
        const int t_next = inv.grid.timesteps[static_cast<std::size_t>(k + 1)];
        const double ab = inv.grid.alpha_bars[static_cast<std::size_t>(k)];
        const double ab_next = inv.grid.alpha_bars[static_cast<std::size_t>(k + 1)];
        LatentStack next = z;
        next.timestep = t_next;
        Eigen::MatrixXd eps = backend.predict(z, inv.grid.timesteps[static_cast<std::size_t>(k)], y).epsilon.data;
        next.data = ddim_step(z.data, eps, ab, ab_next);
        for (int r = 0; r < options.refinements; ++r) {
            eps = backend.predict(next, t_next, y).epsilon.data;
            next.data = ddim_step(z.data, eps, ab, ab_next);
        }
        check_finite(next, t_next);
        inv.trajectory.push_back(std::move(next));
    }
    return inv;
}

Inversion ddim_invert(const MultiViewImageSet& images, const DenoiserBackend& backend, const Condition& y,
                      const InversionOptions& options) {
    return ddim_invert(backend.codec().encode(images), backend, y, options);
}

LatentStack ddim_sample(const LatentStack& zT, const DenoiserBackend& backend, const Condition& y, const DdimGrid& grid,
                        double cfg_scale) {
    LatentStack z = zT;
    for (int k = grid.steps(); k >= 1; --k) {
        const int t = grid.timesteps[static_cast<std::size_t>(k)];
        const LatentStack eps = predict_with_cfg(backend, z, t, y, cfg_scale).epsilon;
        z.data = ddim_step(z.data, eps.data, grid.alpha_bars[static_cast<std::size_t>(k)],
                           grid.alpha_bars[static_cast<std::size_t>(k - 1)]);
        z.timestep = grid.timesteps[static_cast<std::size_t>(k - 1)];
        check_finite(z, t);
    }
    return z;
}

} // namespace mvdrag
