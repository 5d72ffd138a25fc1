#pragma once

#include "mvdrag/core/gaussian_cloud.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace mvdrag {

constexpr int kNumViews = 4;

struct DragPair {
    Eigen::Vector3d source = Eigen::Vector3d::Zero();
    Eigen::Vector3d target = Eigen::Vector3d::Zero();
};

/// One drag pair seen from one rig view. Pixel coordinates are rounded to
/// the nearest pixel center; depths are camera-space z (non-positive when
/// the point sits behind the camera).
struct ProjectedPair {
    int view = 0;
    Eigen::Vector2i source_px = Eigen::Vector2i::Zero();
    Eigen::Vector2i target_px = Eigen::Vector2i::Zero();
    double source_depth = 0.0;
    double target_depth = 0.0;
    bool visible = false;
};

/// Which world frame the drag coordinates are expressed in.
enum class DragFrame { Normalized, Asset };

struct DragSet {
    std::vector<DragPair> pairs;
    DragFrame frame = DragFrame::Normalized;
    /// Filled by project_pairs: projections[view][pair].
    std::array<std::vector<ProjectedPair>, kNumViews> projections;

    std::size_t size() const { return pairs.size(); }
    bool projected() const { return projections[0].size() == pairs.size() && !pairs.empty(); }

    int visible_count(int view) const;
    /// Pairs that are visible in at least one view.
    std::vector<bool> visible_anywhere() const;
};

/// Throws ValidationError unless the set has k >= 1 finite pairs.
void validate(const DragSet& drags);

/// Moves asset-frame handles into the normalized frame; no-op otherwise.
void apply_normalization(DragSet& drags, const Normalization& norm);

/// Schema: {"pairs": [{"source": [x,y,z], "target": [x,y,z]}, ...],
///          "frame": "normalized" | "asset"}  ("frame" optional).
DragSet dragset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DragSet& drags);

DragSet load_dragset(const std::filesystem::path& path);
void save_dragset(const DragSet& drags, const std::filesystem::path& path);

/// Projection file: pairs plus per-view pixel coordinates and visibility.
nlohmann::json projections_to_json(const DragSet& drags, int image_size);
DragSet projections_from_json(const nlohmann::json& j);

} // namespace mvdrag
