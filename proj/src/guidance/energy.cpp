#include "mvdrag/guidance/energy.hpp"

#include "mvdrag/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvdrag {

namespace {

constexpr double kTiny = 1e-300;

struct CellPairs {
    std::vector<int> edited;
    std::vector<int> original;
};

CellPairs edit_cells(const LayerMask& m) {
    CellPairs p;
    for (const auto& [e, o] : m.correspondences) {
        p.edited.push_back(e);
        p.original.push_back(o);
    }
    return p;
}

CellPairs content_cells(const LayerMask& m) {
    CellPairs p;
    p.edited = m.unedited_cells();
    p.original = p.edited;
    return p;
}

void check_layers(const FeatureSet& edited, const FeatureSet& original, const EnergyMasks& masks) {
    if (edited.size() != original.size()) throw ValidationError("feature sets have different layer counts");
    for (const auto& view : masks.views) {
        if (view.size() != edited.size()) throw ValidationError("masks and features have different layer counts");
    }
    for (std::size_t l = 0; l < edited.size(); ++l) {
        if (edited[l].data.rows() != original[l].data.rows() || edited[l].data.cols() != original[l].data.cols()) {
            throw ValidationError("feature layers differ in shape between branches");
        }
        if (masks.views[0][l].height != edited[l].height || masks.views[0][l].width != edited[l].width) {
            throw ValidationError("mask resolution does not match feature layer");
        }
    }
}

/// cos between gathered rows, and optionally its gradient w.r.t. the edited rows.
double masked_cosine(const FeatureMap& edited, const FeatureMap& original, int view, const CellPairs& cells,
                     Eigen::MatrixXd* grad_rows) {
    const Eigen::Index n = static_cast<Eigen::Index>(cells.edited.size());
    const Eigen::Index c = edited.data.cols();
    Eigen::MatrixXd a(n, c);
    Eigen::MatrixXd b(n, c);
    const Eigen::Index base = view * edited.cells_per_view();
    for (Eigen::Index i = 0; i < n; ++i) {
        a.row(i) = edited.data.row(base + cells.edited[static_cast<std::size_t>(i)]);
        b.row(i) = original.data.row(base + cells.original[static_cast<std::size_t>(i)]);
    }
    const double na = a.norm();
    const double nb = b.norm();
    const double denom = std::max(na * nb, kTiny);
    const double cos = (a.array() * b.array()).sum() / denom;
    if (grad_rows) {
        *grad_rows = b / denom;
        if (na > 0.0) *grad_rows -= (cos / (na * na)) * a;
    }
    return cos;
}

template <typename CellFn>
double masked_energy(const FeatureSet& edited, const FeatureSet& original, const EnergyMasks& masks,
                     FeatureSet* grad, CellFn cells_of) {
    check_layers(edited, original, masks);
    if (grad) *grad = zeros_like(edited);
    double total = 0.0;
    for (int v = 0; v < kNumViews; ++v) {
        const auto& layers = masks.views[static_cast<std::size_t>(v)];
        std::vector<CellPairs> cells;
        int active = 0;
        for (const auto& m : layers) {
            cells.push_back(cells_of(m));
            if (!cells.back().edited.empty()) ++active;
        }
        if (active == 0) continue;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            if (cells[l].edited.empty()) continue;
            Eigen::MatrixXd dcos;
            const double cos = masked_cosine(edited[l], original[l], v, cells[l], grad ? &dcos : nullptr);
            const double den = 0.5 * cos + 0.5;
            total += 1.0 / den / active;
            if (!grad) continue;
            const double scale = -0.5 / (den * den) / active;
            const Eigen::Index base = v * edited[l].cells_per_view();
            for (std::size_t i = 0; i < cells[l].edited.size(); ++i) {
                (*grad)[l].data.row(base + cells[l].edited[i]) += scale * dcos.row(static_cast<Eigen::Index>(i));
            }
        }
    }
    return total;
}

} // namespace

double energy_edit(const FeatureSet& edited, const FeatureSet& original, const EnergyMasks& masks, FeatureSet* grad) {
    return masked_energy(edited, original, masks, grad, edit_cells);
}

double energy_content(const FeatureSet& edited, const FeatureSet& original, const EnergyMasks& masks,
                      FeatureSet* grad) {
    return masked_energy(edited, original, masks, grad, content_cells);
}

double patch_similarity(const FeatureSet& edited, const FeatureSet& original, const EnergyMasks& masks) {
    check_layers(edited, original, masks);
    double sum = 0.0;
    int count = 0;
    for (int v = 0; v < kNumViews; ++v) {
        const auto& layers = masks.views[static_cast<std::size_t>(v)];
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const CellPairs cells = edit_cells(layers[l]);
            if (cells.edited.empty()) continue;
            sum += masked_cosine(edited[l], original[l], v, cells, nullptr);
            ++count;
        }
    }
    return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / count;
}

DragEnergy::DragEnergy(const std::vector<LatentStack>& original_trajectory, EnergyMasks masks, double alpha,
                       double beta)
    : trajectory_(original_trajectory), masks_(std::move(masks)), alpha_(alpha), beta_(beta) {}

EnergyTerms DragEnergy::evaluate(const GuidanceContext& ctx, LatentStack& grad) const {
    if (ctx.level < 0 || ctx.level >= static_cast<int>(trajectory_.size())) {
        throw ValidationError("no cached original latent for this sampling level");
    }
    const FeatureSet original =
        ctx.backend.predict(trajectory_[static_cast<std::size_t>(ctx.level)], ctx.timestep, ctx.condition).features;
    const FeatureSet& edited = ctx.prediction.features;
    FeatureSet g_edit;
    FeatureSet g_content;
    EnergyTerms terms;
    terms.edit = energy_edit(edited, original, masks_, &g_edit);
    terms.content = energy_content(edited, original, masks_, &g_content);
    terms.total = alpha_ * terms.edit + beta_ * terms.content;
    terms.similarity = patch_similarity(edited, original, masks_);
    for (std::size_t l = 0; l < g_edit.size(); ++l) g_edit[l].data = alpha_ * g_edit[l].data + beta_ * g_content[l].data;
    grad = ctx.backend.feature_vjp(ctx.latent, ctx.timestep, ctx.condition, g_edit);
    return terms;
}

EnergyTerms QuadraticEnergy::evaluate(const GuidanceContext& ctx, LatentStack& grad) const {
    if (!ctx.latent.same_shape(target_)) throw ValidationError("quadratic energy target has the wrong shape");
    grad = ctx.latent;
    grad.data = 2.0 * (ctx.latent.data - target_.data);
    EnergyTerms terms;
    terms.total = (ctx.latent.data - target_.data).squaredNorm();
    terms.similarity = std::numeric_limits<double>::quiet_NaN();
    return terms;
}

} // namespace mvdrag
