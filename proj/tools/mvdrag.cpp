#include "mvdrag/core/errors.hpp"
#include "mvdrag/core/io.hpp"
#include "mvdrag/metrics/dai.hpp"
#include "mvdrag/pipeline/pipeline.hpp"
#include "mvdrag/pipeline/service.hpp"
#include "mvdrag/pipeline/stages.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

using namespace mvdrag;

namespace {

void add_rig_options(CLI::App* cmd, RigConfig& rig) {
    cmd->add_option("--res,--resolution", rig.resolution, "Square view resolution in pixels")->capture_default_str();
    cmd->add_option("--distance", rig.distance, "Camera distance from the origin")->capture_default_str();
    cmd->add_option("--elevation", rig.elevation, "Rig elevation in degrees")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view drag editing of 3D Gaussian assets"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    RunConfig cfg;
    std::string asset, views, out, proj, drags, cloud, edited, orig, log, config_path, stop_after, stage = "both";
    std::string host = "127.0.0.1";
    int port = 8080;

    auto* render = app.add_subcommand("render", "Render an asset from the four-view rig");
    render->add_option("--asset", asset, "Gaussian .ply or mesh .obj")->required();
    render->add_option("--out", out, "Output view directory")->required();
    add_rig_options(render, cfg.rig);

    auto* project = app.add_subcommand("project", "Project 3D drag pairs into rendered views");
    project->add_option("--drags", drags, "Drag JSON")->required();
    auto* views_opt = project->add_option("--views", views, "View directory from render");
    project->add_option("--asset", asset, "Asset to render when --views is not given")->excludes(views_opt);
    project->add_option("--out", out, "Projection JSON")->required();
    project->add_option("--tolerance", cfg.projection.depth_tolerance, "Depth test slack")->capture_default_str();
    add_rig_options(project, cfg.rig);

    auto* drag = app.add_subcommand("drag", "Guided multi-view drag edit");
    drag->add_option("--views", views, "View directory")->required();
    drag->add_option("--proj", proj, "Projection JSON")->required();
    drag->add_option("--out", out, "Edited view directory")->required();
    drag->add_option("--backend", cfg.denoiser, "toy or adapter:<spec>")->capture_default_str();
    drag->add_option("--alpha", cfg.guidance.alpha)->capture_default_str();
    drag->add_option("--beta", cfg.guidance.beta)->capture_default_str();
    drag->add_option("--eta", cfg.guidance.eta)->capture_default_str();
    drag->add_option("--cfg", cfg.guidance.cfg_scale)->capture_default_str();
    drag->add_option("--steps", cfg.guidance.ddim_steps)->capture_default_str();
    drag->add_option("--text", cfg.guidance.text, "Text condition token");
    drag->add_option("--seed", cfg.seed)->capture_default_str();
    drag->add_option("--log", log, "Run log JSON (default <out>/drag_log.json)");
    add_rig_options(drag, cfg.rig);

    auto* reconstruct = app.add_subcommand("reconstruct", "Fuse four views into one Gaussian cloud");
    reconstruct->add_option("--views", views, "Edited view directory")->required();
    reconstruct->add_option("--backend", cfg.reconstructor, "unproj or adapter:<spec>")->capture_default_str();
    reconstruct->add_option("--out", out, "Fused .ply")->required();
    add_rig_options(reconstruct, cfg.rig);

    auto* refine = app.add_subcommand("refine", "Deformation and score-distillation refinement");
    refine->add_option("--cloud", cloud, "Input .ply")->required();
    refine->add_option("--views", views, "Edited view directory")->required();
    refine->add_option("--stage", stage, "deform, sds or both")
        ->check(CLI::IsMember({"deform", "sds", "both"}))
        ->capture_default_str();
    refine->add_option("--out", out, "Output .ply")->required();
    refine->add_option("--deform-iters", cfg.deform.iterations)->capture_default_str();
    refine->add_option("--deform-lr", cfg.deform.lr)->capture_default_str();
    refine->add_option("--sds-iters", cfg.sds.iterations)->capture_default_str();
    refine->add_option("--backend", cfg.denoiser, "toy or adapter:<spec>")->capture_default_str();
    refine->add_option("--seed", cfg.seed)->capture_default_str();
    refine->add_option("--log", log, "Training log JSON (default next to --out)");
    add_rig_options(refine, cfg.rig);

    auto* evaluate = app.add_subcommand("evaluate", "Dragging Accuracy Index");
    evaluate->add_option("--orig", orig, "Original view directory")->required();
    evaluate->add_option("--edited", edited, "Edited view directory")->required();
    evaluate->add_option("--proj", proj, "Projection JSON")->required();
    evaluate->add_option("--out", out, "Report JSON")->required();

    auto* run = app.add_subcommand("run", "Run the whole pipeline from a config file");
    run->add_option("--config", config_path, "Run config JSON")->required();
    run->add_option("--stop-after", stop_after, "Stop after this stage");

    auto* serve = app.add_subcommand("serve", "HTTP service for the annotator");
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();
    serve->add_option("--asset", asset, "Asset served at /asset/views");
    serve->add_option("--root", out, "Artifact root (default $MVDRAG_ARTIFACT_ROOT or ./runs)");
    add_rig_options(serve, cfg.rig);

    CLI11_PARSE(app, argc, argv);
    if (verbose) spdlog::set_level(spdlog::level::debug);

    try {
        if (*render) {
            stage_render(asset, cfg.rig, out);
        } else if (*project) {
            if (views.empty()) {
                if (asset.empty()) throw ValidationError("project needs --views or --asset");
                views = (fs::path(out).parent_path() / "views").string();
                stage_render(asset, cfg.rig, views);
            }
            const DragSet d = stage_project(drags, views, cfg.rig, cfg.projection, out);
            for (int v = 0; v < kNumViews; ++v) spdlog::info("view {}: {} of {} pairs visible", v, d.visible_count(v), d.size());
        } else if (*drag) {
            stage_drag(views, proj, cfg, cfg.seed, out, log.empty() ? fs::path(out) / "drag_log.json" : fs::path(log));
        } else if (*reconstruct) {
            stage_reconstruct(views, cfg.reconstructor, cfg.rig, out);
        } else if (*refine) {
            const fs::path target(out);
            const fs::path base = target.parent_path() / target.stem();
            if (stage == "deform") {
                stage_deform(cloud, views, cfg, cfg.seed, target, log.empty() ? base.string() + "_deform_log.json" : log);
            } else if (stage == "sds") {
                stage_sds(cloud, views, cfg, cfg.seed, target, log.empty() ? base.string() + "_sds_log.json" : log);
            } else {
                const fs::path mid = base.string() + "_deformed.ply";
                stage_deform(cloud, views, cfg, cfg.seed, mid, base.string() + "_deform_log.json");
                stage_sds(mid, views, cfg, cfg.seed + 1, target, base.string() + "_sds_log.json");
            }
        } else if (*evaluate) {
            const auto report =
                dai_report(load_views(orig), load_views(edited), projections_from_json(read_json(proj)));
            write_json(to_json(report), out);
            for (const auto& [g, s] : report.scores) std::cout << "DAI gamma=" << g << ": " << s << '\n';
        } else if (*run) {
            PipelineOptions options;
            if (!stop_after.empty()) options.stop_after = stop_after;
            const RunManifest m = run_pipeline(load_run_config(config_path), options);
            for (const auto& s : m.stages) std::cout << s.name << ": " << to_string(s.status) << (s.reused ? " (reused)" : "") << '\n';
            return m.failed() ? 1 : 0;
        } else if (*serve) {
            ServiceOptions options;
            if (!asset.empty()) options.asset = fs::path(asset);
            if (!out.empty()) options.artifact_root = out;
            options.rig = cfg.rig;
            Service service(options);
            spdlog::info("listening on {}:{}", host, port);
            service.listen(host, port);
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
