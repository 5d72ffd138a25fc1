#include "mvdrag/metrics/dai.hpp"

#include "mvdrag/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mvdrag {

namespace {

using Plane = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void check_pair(const MultiViewImageSet& original, const MultiViewImageSet& edited, const DragSet& drags) {
    validate(original);
    validate(edited);
    if (original.width() != edited.width() || original.height() != edited.height()) {
        throw ValidationError("original and edited views differ in resolution");
    }
    if (!drags.projected()) throw ValidationError("drag pairs must be projected before evaluation");
}

} // namespace

double dai_patch_term(const ViewImage& original, const ViewImage& edited, const Eigen::Vector2i& source,
                      const Eigen::Vector2i& target, int gamma) {
    if (gamma < 0) throw ValidationError("patch radius must be non-negative");
    const int W = original.width;
    const int H = original.height;
    const int x0 = std::max({-gamma, -source.x(), -target.x()});
    const int x1 = std::min({gamma, W - 1 - source.x(), W - 1 - target.x()});
    const int y0 = std::max({-gamma, -source.y(), -target.y()});
    const int y1 = std::min({gamma, H - 1 - source.y(), H - 1 - target.y()});
    if (x1 < x0 || y1 < y0) return 0.0;
    const int w = x1 - x0 + 1;
    const int h = y1 - y0 + 1;
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        const Plane a(original.rgb.col(c).data(), H, W);
        const Plane b(edited.rgb.col(c).data(), H, W);
        sum += (a.block(source.y() + y0, source.x() + x0, h, w) - b.block(target.y() + y0, target.x() + x0, h, w))
                   .squaredNorm();
    }
    return sum / (static_cast<double>(w) * h);
}

DaiReport dai_report(const MultiViewImageSet& original, const MultiViewImageSet& edited, const DragSet& drags) {
    check_pair(original, edited, drags);
    DaiReport report;
    for (int g : kDaiGammas) {
        report.scores[g] = 0.0;
        report.per_pair_scores[g] = 0.0;
    }
    for (int v = 0; v < kNumViews; ++v) {
        const auto& pairs = drags.projections[static_cast<std::size_t>(v)];
        const auto& a = original.views[static_cast<std::size_t>(v)];
        const auto& b = edited.views[static_cast<std::size_t>(v)];
        auto& terms = report.terms[static_cast<std::size_t>(v)];
        std::array<double, kDaiGammas.size()> view_sum{};
        int visible = 0;
        for (const auto& p : pairs) {
            std::array<double, kDaiGammas.size()> row;
            if (!p.visible) {
                row.fill(std::numeric_limits<double>::quiet_NaN());
                ++report.culled_per_view[static_cast<std::size_t>(v)];
            } else {
                ++visible;
                for (std::size_t k = 0; k < kDaiGammas.size(); ++k) {
                    row[k] = dai_patch_term(a, b, p.source_px, p.target_px, kDaiGammas[k]);
                    view_sum[k] += row[k];
                }
            }
            terms.push_back(row);
        }
        for (std::size_t k = 0; k < kDaiGammas.size(); ++k) {
            report.scores[kDaiGammas[k]] += view_sum[k] / kNumViews;
            if (visible > 0) report.per_pair_scores[kDaiGammas[k]] += view_sum[k] / visible / kNumViews;
        }
    }
    for (bool seen : drags.visible_anywhere()) {
        if (!seen) ++report.culled_everywhere;
    }
    return report;
}

double dai(const MultiViewImageSet& original, const MultiViewImageSet& edited, const DragSet& drags, int gamma) {
    check_pair(original, edited, drags);
    double total = 0.0;
    for (int v = 0; v < kNumViews; ++v) {
        for (const auto& p : drags.projections[static_cast<std::size_t>(v)]) {
            if (p.visible) {
                total += dai_patch_term(original.views[static_cast<std::size_t>(v)], edited.views[static_cast<std::size_t>(v)],
                                        p.source_px, p.target_px, gamma);
            }
        }
    }
    return total / kNumViews;
}

double dai_per_pair(const MultiViewImageSet& original, const MultiViewImageSet& edited, const DragSet& drags,
                    int gamma) {
    check_pair(original, edited, drags);
    double total = 0.0;
    for (int v = 0; v < kNumViews; ++v) {
        double sum = 0.0;
        int visible = 0;
        for (const auto& p : drags.projections[static_cast<std::size_t>(v)]) {
            if (!p.visible) continue;
            ++visible;
            sum += dai_patch_term(original.views[static_cast<std::size_t>(v)], edited.views[static_cast<std::size_t>(v)],
                                  p.source_px, p.target_px, gamma);
        }
        if (visible > 0) total += sum / visible;
    }
    return total / kNumViews;
}

nlohmann::json to_json(const DaiReport& report) {
    nlohmann::json j;
    j["dai"] = nlohmann::json::object();
    j["dai_per_pair"] = nlohmann::json::object();
    for (const auto& [g, s] : report.scores) j["dai"][std::to_string(g)] = s;
    for (const auto& [g, s] : report.per_pair_scores) j["dai_per_pair"][std::to_string(g)] = s;
    j["views"] = nlohmann::json::array();
    for (int v = 0; v < kNumViews; ++v) {
        nlohmann::json pairs = nlohmann::json::array();
        const auto& terms = report.terms[static_cast<std::size_t>(v)];
        for (std::size_t p = 0; p < terms.size(); ++p) {
            nlohmann::json entry{{"pair", p}, {"visible", !std::isnan(terms[p][0])}};
            nlohmann::json by_gamma = nlohmann::json::object();
            for (std::size_t k = 0; k < kDaiGammas.size(); ++k) {
                by_gamma[std::to_string(kDaiGammas[k])] =
                    std::isnan(terms[p][k]) ? nlohmann::json(nullptr) : nlohmann::json(terms[p][k]);
            }
            entry["terms"] = by_gamma;
            pairs.push_back(entry);
        }
        j["views"].push_back({{"view", v}, {"pairs", pairs}, {"culled", report.culled_per_view[static_cast<std::size_t>(v)]}});
    }
    j["culled_everywhere"] = report.culled_everywhere;
    j["elo"] = nullptr;
    return j;
}

} // namespace mvdrag
