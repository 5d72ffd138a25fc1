#include "mvdrag/pipeline/pipeline.hpp"

#include "mvdrag/core/errors.hpp"
#include "mvdrag/pipeline/stages.hpp"

#include <spdlog/spdlog.h>

#include <chrono>

namespace mvdrag {

namespace {

struct StagePlan {
    std::string name;
    /// Stage-specific config plus the hashes of external inputs.
    nlohmann::json inputs;
    /// Upstream stages whose outputs feed this one.
    std::vector<std::string> upstream;
    std::map<std::string, std::string> outputs;
    std::function<void()> run;
};

std::vector<StagePlan> plan(const RunConfig& c) {
    const fs::path out = c.output_dir;
    const nlohmann::json cj = to_json(c);
    const std::uint64_t seed = c.seed;
    std::vector<StagePlan> p;
    p.push_back({"render",
                 {{"asset", hash_path(c.asset)}, {"rig", cj["rig"]}},
                 {},
                 {{"views", "views"}},
                 [=] { stage_render(c.asset, c.rig, out / "views"); }});
    p.push_back({"project",
                 {{"drags", hash_path(c.drags)}, {"projection", cj["projection"]}},
                 {"render"},
                 {{"projections", "proj.json"}},
                 [=] { stage_project(c.drags, out / "views", c.rig, c.projection, out / "proj.json"); }});
    p.push_back({"drag",
                 {{"guidance", cj["guidance"]},
                  {"denoiser", c.denoiser},
                  {"toy_sigma", c.toy_sigma},
                  {"toy_view_mixing", c.toy_view_mixing},
                  {"seed", seed}},
                 {"render", "project"},
                 {{"edited", "edited"}, {"drag_log", "drag_log.json"}},
                 [=] { stage_drag(out / "views", out / "proj.json", c, seed + 1, out / "edited", out / "drag_log.json"); }});
    p.push_back({"reconstruct",
                 {{"reconstructor", c.reconstructor}},
                 {"drag"},
                 {{"fused", "fused.ply"}},
                 [=] { stage_reconstruct(out / "edited", c.reconstructor, c.rig, out / "fused.ply"); }});
    p.push_back({"deform",
                 {{"deform", cj["deform"]}, {"perceptual", c.perceptual}, {"seed", seed}},
                 {"reconstruct", "drag"},
                 {{"deformed", "deformed.ply"}, {"deform_log", "deform_log.json"}},
                 [=] { stage_deform(out / "fused.ply", out / "edited", c, seed + 2, out / "deformed.ply", out / "deform_log.json"); }});
    p.push_back({"sds",
                 {{"sds", cj["sds"]}, {"denoiser", c.denoiser}, {"perceptual", c.perceptual}, {"seed", seed}},
                 {"deform", "drag"},
                 {{"final", "final.ply"}, {"sds_log", "sds_log.json"}},
                 [=] { stage_sds(out / "deformed.ply", out / "edited", c, seed + 3, out / "final.ply", out / "sds_log.json"); }});
    p.push_back({"evaluate",
                 {},
                 {"render", "project", "drag", "sds"},
                 {{"dai", "dai.json"}, {"final_views", "final_views"}},
                 [=] {
                     stage_evaluate(out / "views", out / "proj.json", out / "final.ply", out / "edited", c.rig,
                                    out / "final_views", out / "dai.json");
                 }});
    return p;
}

bool outputs_intact(const StageRecord& r, const fs::path& out) {
    if (r.status != StageStatus::Complete || r.outputs.empty()) return false;
    for (const auto& [name, a] : r.outputs) {
        if (!fs::exists(out / a.path) || hash_path(out / a.path) != a.hash) return false;
    }
    return true;
}

} // namespace

RunManifest run_pipeline(const RunConfig& config, const PipelineOptions& options) {
    config.validate();
    if (options.stop_after) {
        bool known = false;
        for (const char* n : kStageNames) known = known || *options.stop_after == n;
        if (!known) throw ValidationError("unknown stage '" + *options.stop_after + "'");
    }
    const fs::path out = config.output_dir;
    OutputLock lock(out);

    RunManifest previous = load_manifest(out).value_or(RunManifest{});
    RunManifest manifest;
    manifest.config = to_json(config);
    manifest.events = previous.events;
    for (const char* n : kStageNames) {
        StageRecord rec;
        rec.name = n;
        manifest.stages.push_back(std::move(rec));
    }
    auto publish = [&] {
        save_manifest(manifest, out);
        if (options.on_update) options.on_update(manifest);
    };

    bool failed = false;
    bool stopped = false;
    for (auto& stage : plan(config)) {
        StageRecord& rec = *manifest.find(stage.name);
        if (failed) {
            rec.status = StageStatus::Skipped;
            manifest.record(stage.name, StageStatus::Skipped, "upstream stage failed");
            continue;
        }
        if (stopped) continue;

        nlohmann::json inputs = stage.inputs;
        for (const auto& up : stage.upstream) {
            for (const auto& [name, a] : manifest.find(up)->outputs) inputs["upstream"][up][name] = a.hash;
        }
        rec.input_hash = fnv1a_hex(inputs.dump());

        const StageRecord* old = previous.find(stage.name);
        if (old && old->input_hash == rec.input_hash && outputs_intact(*old, out)) {
            rec.status = StageStatus::Complete;
            rec.outputs = old->outputs;
            rec.seconds = old->seconds;
            rec.reused = true;
            manifest.record(stage.name, StageStatus::Complete, "reused");
            spdlog::info("stage {}: reused", stage.name);
        } else {
            rec.status = StageStatus::Running;
            manifest.record(stage.name, StageStatus::Running);
            publish();
            spdlog::info("stage {}: running", stage.name);
            const auto start = std::chrono::steady_clock::now();
            try {
                stage.run();
                for (const auto& [name, path] : stage.outputs) rec.outputs[name] = {path, hash_path(out / path)};
                rec.status = StageStatus::Complete;
                manifest.record(stage.name, StageStatus::Complete);
            } catch (const std::exception& e) {
                rec.status = StageStatus::Failed;
                rec.error = e.what();
                manifest.record(stage.name, StageStatus::Failed, e.what());
                spdlog::error("stage {} failed: {}", stage.name, e.what());
                failed = true;
            }
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        publish();
        if (options.stop_after && *options.stop_after == stage.name) stopped = true;
    }
    publish();
    return manifest;
}

} // namespace mvdrag
