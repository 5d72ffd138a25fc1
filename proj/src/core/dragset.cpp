#include "mvdrag/core/dragset.hpp"

#include "mvdrag/core/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>

namespace mvdrag {

using nlohmann::json;

int DragSet::visible_count(int view) const {
    int count = 0;
    for (const auto& p : projections[static_cast<std::size_t>(view)]) count += p.visible ? 1 : 0;
    return count;
}

std::vector<bool> DragSet::visible_anywhere() const {
    std::vector<bool> out(pairs.size(), false);
    for (const auto& view : projections) {
        for (std::size_t j = 0; j < view.size() && j < out.size(); ++j) out[j] = out[j] || view[j].visible;
    }
    return out;
}

void validate(const DragSet& drags) {
    if (drags.pairs.empty()) throw ValidationError("drag set needs at least one pair (k >= 1)");
    for (std::size_t j = 0; j < drags.pairs.size(); ++j) {
        if (!drags.pairs[j].source.allFinite() || !drags.pairs[j].target.allFinite()) {
            throw ValidationError("drag pair " + std::to_string(j) + " has non-finite coordinates");
        }
    }
}

void apply_normalization(DragSet& drags, const Normalization& norm) {
    if (drags.frame != DragFrame::Asset) return;
    for (auto& p : drags.pairs) {
        p.source = norm.apply(p.source);
        p.target = norm.apply(p.target);
    }
    drags.frame = DragFrame::Normalized;
    for (auto& v : drags.projections) v.clear();
}

namespace {

Eigen::Vector3d read_point(const json& j, const char* field, std::size_t index) {
    if (!j.contains(field)) {
        throw FormatError("pair " + std::to_string(index) + " is missing '" + field + "'");
    }
    const auto& arr = j.at(field);
    if (!arr.is_array() || arr.size() != 3) {
        throw FormatError("pair " + std::to_string(index) + " field '" + field + "' must be [x, y, z]");
    }
    Eigen::Vector3d p;
    for (int k = 0; k < 3; ++k) {
        if (!arr[static_cast<std::size_t>(k)].is_number()) {
            throw FormatError("pair " + std::to_string(index) + " field '" + field + "' must be numeric");
        }
        p(k) = arr[static_cast<std::size_t>(k)].get<double>();
    }
    return p;
}

json depth_to_json(double z) {
    return std::isfinite(z) ? json(z) : json(nullptr);
}

double depth_from_json(const json& j) {
    return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

} // namespace

DragSet dragset_from_json(const json& j) {
    if (!j.is_object() || !j.contains("pairs") || !j.at("pairs").is_array()) {
        throw FormatError("drag JSON must be an object with a 'pairs' array");
    }
    DragSet drags;
    if (j.contains("frame")) {
        const auto frame = j.at("frame").get<std::string>();
        if (frame == "normalized") drags.frame = DragFrame::Normalized;
        else if (frame == "asset") drags.frame = DragFrame::Asset;
        else throw FormatError("drag JSON 'frame' must be 'normalized' or 'asset'");
    }
    std::size_t index = 0;
    for (const auto& item : j.at("pairs")) {
        if (!item.is_object()) throw FormatError("pair " + std::to_string(index) + " must be an object");
        drags.pairs.push_back({read_point(item, "source", index), read_point(item, "target", index)});
        ++index;
    }
    validate(drags);
    return drags;
}

json to_json(const DragSet& drags) {
    json pairs = json::array();
    for (const auto& p : drags.pairs) {
        pairs.push_back({{"source", {p.source.x(), p.source.y(), p.source.z()}},
                         {"target", {p.target.x(), p.target.y(), p.target.z()}}});
    }
    return {{"frame", drags.frame == DragFrame::Asset ? "asset" : "normalized"}, {"pairs", pairs}};
}

DragSet load_dragset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open drag file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("malformed drag JSON in " + path.string() + ": " + e.what());
    }
    return dragset_from_json(j);
}

void save_dragset(const DragSet& drags, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write drag file " + path.string());
    out << to_json(drags).dump(2) << '\n';
}

json projections_to_json(const DragSet& drags, int image_size) {
    json j = to_json(drags);
    j["image_size"] = image_size;
    json views = json::array();
    for (int v = 0; v < kNumViews; ++v) {
        json entries = json::array();
        for (const auto& p : drags.projections[static_cast<std::size_t>(v)]) {
            entries.push_back({{"source_px", {p.source_px.x(), p.source_px.y()}},
                               {"target_px", {p.target_px.x(), p.target_px.y()}},
                               {"source_depth", depth_to_json(p.source_depth)},
                               {"target_depth", depth_to_json(p.target_depth)},
                               {"visible", p.visible}});
        }
        views.push_back({{"view", v}, {"pairs", entries}});
    }
    j["views"] = views;
    return j;
}

DragSet projections_from_json(const json& j) {
    DragSet drags = dragset_from_json(j);
    if (!j.contains("views") || !j.at("views").is_array() || j.at("views").size() != kNumViews) {
        throw FormatError("projection JSON needs a 'views' array of length 4");
    }
    for (int v = 0; v < kNumViews; ++v) {
        const auto& entries = j.at("views")[static_cast<std::size_t>(v)].at("pairs");
        if (entries.size() != drags.pairs.size()) throw FormatError("projection view has wrong pair count");
        auto& out = drags.projections[static_cast<std::size_t>(v)];
        for (const auto& e : entries) {
            ProjectedPair p;
            p.view = v;
            p.source_px = {e.at("source_px")[0].get<int>(), e.at("source_px")[1].get<int>()};
            p.target_px = {e.at("target_px")[0].get<int>(), e.at("target_px")[1].get<int>()};
            p.source_depth = depth_from_json(e.at("source_depth"));
            p.target_depth = depth_from_json(e.at("target_depth"));
            p.visible = e.at("visible").get<bool>();
            out.push_back(p);
        }
    }
    return drags;
}

} // namespace mvdrag
