#include "mvdrag/pipeline/stages.hpp"

#include "mvdrag/core/errors.hpp"
#include "mvdrag/core/io.hpp"
#include "mvdrag/metrics/dai.hpp"
#include "mvdrag/reconstruct/reconstruct.hpp"
#include "mvdrag/guidance/mixture_backend.hpp"
#include "mvdrag/refine/optimize_positions.hpp"

#include <cmath>
#include <fstream>

namespace mvdrag {

void write_json(const nlohmann::json& j, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }
}

void stage_render(const fs::path& asset, const RigConfig& rig, const fs::path& views_dir) {
    Normalization norm;
    const Asset loaded = load_asset(asset, &norm);
    const MultiViewImageSet views = render_rig(loaded, rig);
    save_views(views, views_dir);
    write_json({{"center", {norm.center.x(), norm.center.y(), norm.center.z()}}, {"scale", norm.scale}},
               views_dir / "normalization.json");
}

DragSet stage_project(const fs::path& drags, const fs::path& views_dir, const RigConfig& rig,
                      const ProjectionOptions& options, const fs::path& out_json) {
    DragSet set = load_dragset(drags);
    if (set.frame == DragFrame::Asset) {
        const auto norm_path = views_dir / "normalization.json";
        if (!fs::exists(norm_path)) throw ValidationError("asset-frame drags need " + norm_path.string());
        const auto j = read_json(norm_path);
        Normalization norm;
        norm.center = Eigen::Vector3d(j.at("center")[0].get<double>(), j.at("center")[1].get<double>(),
                                      j.at("center")[2].get<double>());
        norm.scale = j.at("scale").get<double>();
        apply_normalization(set, norm);
    }
    const DragSet projected = project_pairs(set, load_views(views_dir), rig, options);
    write_json(projections_to_json(projected, rig.resolution), out_json);
    return projected;
}

std::unique_ptr<DenoiserBackend> make_drag_denoiser(const std::string& spec, const MultiViewImageSet& views,
                                                    double toy_sigma, double toy_view_mixing) {
    if (spec == "toy") {
        const LatentStack latents = IdentityCodec().encode(views);
        return std::make_unique<MixtureBackend>(toy_backend(latents, toy_sigma, toy_view_mixing));
    }
    if (spec.rfind("adapter:", 0) == 0) return make_denoiser_adapter(spec.substr(8));
    throw ValidationError("unknown denoiser '" + spec + "'");
}

namespace {

Condition rig_condition(const std::string& text, const RigConfig& rig) {
    Condition y;
    y.text = text;
    const auto cams = rig.cameras();
    y.poses.assign(cams.begin(), cams.end());
    return y;
}

std::unique_ptr<ReconstructorBackend> make_reconstructor(const std::string& spec) {
    if (spec == "unproj") return depth_unprojection_backend();
    if (spec.rfind("adapter:", 0) == 0) return make_reconstructor_adapter(spec.substr(8));
    throw ValidationError("unknown reconstructor '" + spec + "'");
}

} // namespace

void stage_drag(const fs::path& views_dir, const fs::path& proj_json, const RunConfig& config, std::uint64_t seed,
                const fs::path& edited_dir, const fs::path& log_json) {
    const MultiViewImageSet views = load_views(views_dir);
    const DragSet drags = projections_from_json(read_json(proj_json));
    const auto backend = make_drag_denoiser(config.denoiser, views, config.toy_sigma, config.toy_view_mixing);
    const DragEditResult result =
        drag_edit(views, drags, *backend, config.guidance, rig_condition(config.guidance.text, config.rig), seed);
    save_views(result.edited, edited_dir);
    write_json(result.log, log_json);
}

void stage_reconstruct(const fs::path& views_dir, const std::string& backend, const RigConfig& rig,
                       const fs::path& out_ply) {
    const auto reconstructor = make_reconstructor(backend);
    const GaussianCloud fused = regress_and_fuse(load_views(views_dir), rig, *reconstructor);
    if (out_ply.has_parent_path()) fs::create_directories(out_ply.parent_path());
    save_gaussians(fused, out_ply);
}

void stage_deform(const fs::path& cloud_ply, const fs::path& views_dir, const RunConfig& config, std::uint64_t seed,
                  const fs::path& out_ply, const fs::path& log_json) {
    const GaussianCloud cloud = load_gaussians(cloud_ply);
    const auto loss = make_perceptual_loss(config.perceptual);
    DeformOptions options;
    options.iterations = config.deform.iterations;
    options.lr = config.deform.lr;
    options.bands = config.deform.bands;
    options.hidden = config.deform.hidden;
    options.seed = seed;
    const DeformResult result = optimize_positions(cloud, load_views(views_dir), config.rig, *loss, options);
    if (out_ply.has_parent_path()) fs::create_directories(out_ply.parent_path());
    save_gaussians(result.cloud, out_ply);
    const double rms = result.displacement.rows() == 0
                           ? 0.0
                           : std::sqrt(result.displacement.squaredNorm() / static_cast<double>(result.displacement.rows()));
    write_json({{"loss", result.losses}, {"displacement_rms", rms}}, log_json);
}

void stage_sds(const fs::path& cloud_ply, const fs::path& views_dir, const RunConfig& config, std::uint64_t seed,
               const fs::path& out_ply, const fs::path& log_json) {
    const GaussianCloud cloud = load_gaussians(cloud_ply);
    const MultiViewImageSet edited = load_views(views_dir);
    const auto loss = make_perceptual_loss(config.perceptual);
    std::unique_ptr<DenoiserBackend> backend;
    if (config.denoiser == "toy") {
        backend = std::make_unique<TargetRenderBackend>(cloud, config.rig);
    } else {
        backend = make_denoiser_adapter(config.denoiser.substr(8));
    }
    SDSConfig sds = config.sds;
    sds.seed = seed;
    sds.text = config.guidance.text;
    const SdsResult result = refine_sds(cloud, edited, config.rig, *backend, *loss, sds);
    if (out_ply.has_parent_path()) fs::create_directories(out_ply.parent_path());
    save_gaussians(result.cloud, out_ply);
    nlohmann::json log = nlohmann::json::array();
    for (const auto& s : result.log) {
        log.push_back({{"iteration", s.iteration},
                       {"t_max", s.t_max},
                       {"t", s.t_fraction},
                       {"timestep", s.timestep},
                       {"phase", s.phase},
                       {"condition_view", s.condition_view},
                       {"sds_grad_norm", s.sds_grad_norm},
                       {"perceptual", s.perceptual},
                       {"gaussians", s.gaussians},
                       {"skipped", s.skipped}});
    }
    write_json({{"iterations", log}}, log_json);
}

void stage_evaluate(const fs::path& original_dir, const fs::path& proj_json, const fs::path& cloud_ply,
                    const fs::path& edited_dir, const RigConfig& rig, const fs::path& render_dir,
                    const fs::path& out_json) {
    const MultiViewImageSet original = load_views(original_dir);
    const DragSet drags = projections_from_json(read_json(proj_json));
    const GaussianCloud cloud = load_gaussians(cloud_ply);
    const MultiViewImageSet renders = render_rig(cloud, rig);
    save_views(renders, render_dir);
    nlohmann::json j = to_json(dai_report(original, renders, drags));
    if (!edited_dir.empty()) j["edited_2d"] = to_json(dai_report(original, load_views(edited_dir), drags));
    write_json(j, out_json);
}

} // namespace mvdrag
