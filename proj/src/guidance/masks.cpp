#include "mvdrag/guidance/masks.hpp"

#include "mvdrag/core/errors.hpp"

#include <algorithm>

namespace mvdrag {

std::vector<int> LayerMask::unedited_cells() const {
    std::vector<int> cells;
    for (std::size_t i = 0; i < unedited.size(); ++i) {
        if (unedited[i]) cells.push_back(static_cast<int>(i));
    }
    return cells;
}

std::vector<LayerShape> layer_shapes(const std::vector<int>& strides, int height, int width) {
    std::vector<LayerShape> out;
    for (int s : strides) {
        if (s < 1) throw ValidationError("feature stride must be positive");
        out.push_back({s, height / s, width / s});
    }
    return out;
}

namespace {

LayerMask build_layer(const std::vector<ProjectedPair>& pairs, const LayerShape& shape) {
    LayerMask m;
    m.stride = shape.stride;
    m.height = shape.height;
    m.width = shape.width;
    const std::size_t cells = static_cast<std::size_t>(shape.height) * static_cast<std::size_t>(shape.width);
    m.edit.assign(cells, false);
    m.origin.assign(cells, false);
    std::vector<bool> touched(cells, false);

    const int side = std::max(1, (3 + shape.stride - 1) / shape.stride);
    const int lo = -(side - 1) / 2;
    auto inside = [&](int x, int y) { return x >= 0 && y >= 0 && x < shape.width && y < shape.height; };
    auto cell = [&](int x, int y) { return y * shape.width + x; };

    for (const auto& pair : pairs) {
        if (!pair.visible) continue;
        const int sx = pair.source_px.x() / shape.stride;
        const int sy = pair.source_px.y() / shape.stride;
        const int tx = pair.target_px.x() / shape.stride;
        const int ty = pair.target_px.y() / shape.stride;
        for (int dy = lo; dy < lo + side; ++dy) {
            for (int dx = lo; dx < lo + side; ++dx) {
                const bool s_in = inside(sx + dx, sy + dy);
                const bool t_in = inside(tx + dx, ty + dy);
                if (s_in) touched[static_cast<std::size_t>(cell(sx + dx, sy + dy))] = true;
                if (t_in) touched[static_cast<std::size_t>(cell(tx + dx, ty + dy))] = true;
                if (!s_in || !t_in) continue;
                const int e = cell(tx + dx, ty + dy);
                const int o = cell(sx + dx, sy + dy);
                if (m.edit[static_cast<std::size_t>(e)]) continue;
                m.edit[static_cast<std::size_t>(e)] = true;
                m.origin[static_cast<std::size_t>(o)] = true;
                m.correspondences.emplace_back(e, o);
            }
        }
    }

    m.unedited.assign(cells, true);
    for (int y = 0; y < shape.height; ++y) {
        for (int x = 0; x < shape.width; ++x) {
            if (!touched[static_cast<std::size_t>(cell(x, y))]) continue;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (inside(x + dx, y + dy)) m.unedited[static_cast<std::size_t>(cell(x + dx, y + dy))] = false;
                }
            }
        }
    }
    return m;
}

} // namespace

EnergyMasks build_masks(const DragSet& drags, const std::vector<LayerShape>& layers) {
    if (!drags.projected()) throw ValidationError("drag pairs must be projected before building masks");
    EnergyMasks masks;
    for (int v = 0; v < kNumViews; ++v) {
        for (const auto& shape : layers) {
            masks.views[static_cast<std::size_t>(v)].push_back(
                build_layer(drags.projections[static_cast<std::size_t>(v)], shape));
        }
    }
    return masks;
}

} // namespace mvdrag
