#include "mvdrag/pipeline/config.hpp"

#include "mvdrag/core/errors.hpp"

#include <fstream>

namespace mvdrag {

void RunConfig::validate() const {
    if (asset.empty() || !std::filesystem::is_regular_file(asset)) {
        throw ValidationError("asset path does not exist: '" + asset.string() + "'");
    }
    if (drags.empty() || !std::filesystem::is_regular_file(drags)) {
        throw ValidationError("drag file does not exist: '" + drags.string() + "'");
    }
    if (output_dir.empty()) throw ValidationError("output directory is required");
    if (denoiser != "toy" && denoiser.rfind("adapter:", 0) != 0) {
        throw ValidationError("denoiser must be 'toy' or 'adapter:<spec>'");
    }
    if (reconstructor != "unproj" && reconstructor.rfind("adapter:", 0) != 0) {
        throw ValidationError("reconstructor must be 'unproj' or 'adapter:<spec>'");
    }
    if (!(toy_sigma > 0.0)) throw ValidationError("toy_sigma must be positive");
    if (deform.iterations < 0 || !(deform.lr > 0.0)) throw ValidationError("invalid deform schedule");
    rig.validate();
    guidance.validate();
    sds.validate();
}

nlohmann::json to_json(const RunConfig& c) {
    return {
        {"asset", c.asset.string()},
        {"drags", c.drags.string()},
        {"output_dir", c.output_dir.string()},
        {"seed", c.seed},
        {"denoiser", c.denoiser},
        {"reconstructor", c.reconstructor},
        {"perceptual", c.perceptual},
        {"toy_sigma", c.toy_sigma},
        {"toy_view_mixing", c.toy_view_mixing},
        {"rig",
         {{"azimuths", c.rig.azimuths},
          {"elevation", c.rig.elevation},
          {"resolution", c.rig.resolution},
          {"background", c.rig.background},
          {"distance", c.rig.distance},
          {"fov_y", c.rig.fov_y}}},
        {"projection", {{"depth_tolerance", c.projection.depth_tolerance}, {"scene_radius", c.projection.scene_radius}}},
        {"guidance", to_json(c.guidance)},
        {"deform",
         {{"iterations", c.deform.iterations}, {"lr", c.deform.lr}, {"bands", c.deform.bands}, {"hidden", c.deform.hidden}}},
        {"sds",
         {{"iterations", c.sds.iterations},
          {"t_max_start", c.sds.t_max_start},
          {"t_max_end", c.sds.t_max_end},
          {"t_min", c.sds.t_min},
          {"cfg_scale", c.sds.cfg_scale},
          {"lambda_sds", c.sds.lambda_sds},
          {"lambda_perceptual", c.sds.lambda_perceptual},
          {"densify", c.sds.densify},
          {"densify_interval", c.sds.densify_interval},
          {"grad_threshold", c.sds.densify_options.grad_threshold},
          {"prune_opacity", c.sds.densify_options.prune_opacity},
          {"max_growth", c.sds.max_growth}}},
    };
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("run config must be a JSON object");
    RunConfig c;
    try {
        c.asset = j.value("asset", std::string());
        c.drags = j.value("drags", std::string());
        c.output_dir = j.value("output_dir", std::string());
        c.seed = j.value("seed", c.seed);
        c.denoiser = j.value("denoiser", c.denoiser);
        c.reconstructor = j.value("reconstructor", c.reconstructor);
        c.perceptual = j.value("perceptual", c.perceptual);
        c.toy_sigma = j.value("toy_sigma", c.toy_sigma);
        c.toy_view_mixing = j.value("toy_view_mixing", c.toy_view_mixing);
        if (j.contains("rig")) {
            const auto& r = j.at("rig");
            c.rig.azimuths = r.value("azimuths", c.rig.azimuths);
            c.rig.elevation = r.value("elevation", c.rig.elevation);
            c.rig.resolution = r.value("resolution", c.rig.resolution);
            c.rig.background = r.value("background", c.rig.background);
            c.rig.distance = r.value("distance", c.rig.distance);
            c.rig.fov_y = r.value("fov_y", c.rig.fov_y);
        }
        if (j.contains("projection")) {
            const auto& p = j.at("projection");
            c.projection.depth_tolerance = p.value("depth_tolerance", c.projection.depth_tolerance);
            c.projection.scene_radius = p.value("scene_radius", c.projection.scene_radius);
        }
        if (j.contains("guidance")) c.guidance = guidance_config_from_json(j.at("guidance"));
        if (j.contains("deform")) {
            const auto& d = j.at("deform");
            c.deform.iterations = d.value("iterations", c.deform.iterations);
            c.deform.lr = d.value("lr", c.deform.lr);
            c.deform.bands = d.value("bands", c.deform.bands);
            c.deform.hidden = d.value("hidden", c.deform.hidden);
        }
        if (j.contains("sds")) {
            const auto& s = j.at("sds");
            c.sds.iterations = s.value("iterations", c.sds.iterations);
            c.sds.t_max_start = s.value("t_max_start", c.sds.t_max_start);
            c.sds.t_max_end = s.value("t_max_end", c.sds.t_max_end);
            c.sds.t_min = s.value("t_min", c.sds.t_min);
            c.sds.cfg_scale = s.value("cfg_scale", c.sds.cfg_scale);
            c.sds.lambda_sds = s.value("lambda_sds", c.sds.lambda_sds);
            c.sds.lambda_perceptual = s.value("lambda_perceptual", c.sds.lambda_perceptual);
            c.sds.densify = s.value("densify", c.sds.densify);
            c.sds.densify_interval = s.value("densify_interval", c.sds.densify_interval);
            c.sds.densify_options.grad_threshold = s.value("grad_threshold", c.sds.densify_options.grad_threshold);
            c.sds.densify_options.prune_opacity = s.value("prune_opacity", c.sds.densify_options.prune_opacity);
            c.sds.max_growth = s.value("max_growth", c.sds.max_growth);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("run config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open run config '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("run config '" + path.string() + "': " + e.what());
    }
    RunConfig c = run_config_from_json(j);
    const auto base = path.parent_path();
    for (auto* p : {&c.asset, &c.drags, &c.output_dir}) {
        if (!p->empty() && p->is_relative()) *p = base / *p;
    }
    return c;
}

} // namespace mvdrag
