#pragma once

#include "mvdrag/core/dragset.hpp"
#include "mvdrag/core/image.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <vector>

namespace mvdrag {

inline constexpr std::array<int, 5> kDaiGammas{1, 3, 5, 7, 10};

/// Squared RGB distance between the patch of radius gamma around `source`
/// in `original` and around `target` in `edited`, divided by the number of
/// patch cells that fall inside the image for both endpoints.
double dai_patch_term(const ViewImage& original, const ViewImage& edited, const Eigen::Vector2i& source,
                      const Eigen::Vector2i& target, int gamma);

/// (1/4) sum over views of the sum over visible pairs of dai_patch_term.
/// Visibility comes from the projections stored in `drags`. Throws
/// ValidationError if the sets differ in resolution.
double dai(const MultiViewImageSet& original, const MultiViewImageSet& edited, const DragSet& drags, int gamma);

/// Like dai, but each view's sum is divided by its visible pair count.
double dai_per_pair(const MultiViewImageSet& original, const MultiViewImageSet& edited, const DragSet& drags, int gamma);

struct DaiReport {
    std::map<int, double> scores;
    std::map<int, double> per_pair_scores;
    /// terms[view][pair][gamma index]; NaN where the pair is not visible.
    std::array<std::vector<std::array<double, kDaiGammas.size()>>, kNumViews> terms;
    std::array<int, kNumViews> culled_per_view{};
    int culled_everywhere = 0;
};

DaiReport dai_report(const MultiViewImageSet& original, const MultiViewImageSet& edited, const DragSet& drags);

/// Report layout with gamma keys "1".."10" and an "elo" slot left null.
nlohmann::json to_json(const DaiReport& report);

} // namespace mvdrag
