#include "mvdrag/core/image.hpp"

#include "mvdrag/core/errors.hpp"

namespace mvdrag {

void validate(const MultiViewImageSet& set) {
    const int w = set.width();
    const int h = set.height();
    if (w <= 0 || h <= 0) throw ValidationError("multi-view set has an empty resolution");
    for (std::size_t i = 0; i < set.views.size(); ++i) {
        const auto& v = set.views[i];
        if (v.width != w || v.height != h) throw ValidationError("multi-view set views differ in resolution");
        if (v.rgb.rows() != v.pixels()) throw ValidationError("view " + std::to_string(i) + " rgb plane has wrong size");
        if (v.depth.size() != 0 && !v.has_depth()) throw ValidationError("view " + std::to_string(i) + " depth has wrong size");
        if (v.alpha.size() != 0 && !v.has_alpha()) throw ValidationError("view " + std::to_string(i) + " alpha has wrong size");
    }
}

MultiViewImageSet with_colors(const MultiViewImageSet& base, const MultiViewImageSet& colors) {
    validate(base);
    validate(colors);
    if (base.width() != colors.width() || base.height() != colors.height()) {
        throw ValidationError("color replacement needs matching resolutions");
    }
    MultiViewImageSet out = base;
    for (std::size_t i = 0; i < out.views.size(); ++i) out.views[i].rgb = colors.views[i].rgb;
    return out;
}

} // namespace mvdrag
