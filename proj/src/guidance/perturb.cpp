#include "mvdrag/guidance/perturb.hpp"

#include "mvdrag/core/errors.hpp"

#include <algorithm>
#include <random>

namespace mvdrag {

MultiViewImageSet perturb_background(const MultiViewImageSet& images, double std, std::uint64_t seed) {
    validate(images);
    if (!(std >= 0.0)) throw ValidationError("background noise std must be non-negative");
    MultiViewImageSet out = images;
    if (std == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, std);
    for (auto& view : out.views) {
        if (!view.has_alpha()) throw ValidationError("background perturbation needs alpha masks");
        for (Eigen::Index i = 0; i < view.pixels(); ++i) {
            if (view.alpha(i) >= 0.5) continue;
            for (int c = 0; c < 3; ++c) view.rgb(i, c) = std::clamp(view.rgb(i, c) + noise(rng), 0.0, 1.0);
        }
    }
    return out;
}

} // namespace mvdrag
