#pragma once

#include "mvdrag/pipeline/config.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace mvdrag {

namespace fs = std::filesystem;

/// Renders the normalized asset from the rig into `views_dir` and writes the
/// applied transform to views_dir/normalization.json.
void stage_render(const fs::path& asset, const RigConfig& rig, const fs::path& views_dir);

/// Projects the drags (moved into the normalized frame if they are in the
/// asset frame) into the rendered views and writes the projection file.
DragSet stage_project(const fs::path& drags, const fs::path& views_dir, const RigConfig& rig,
                      const ProjectionOptions& options, const fs::path& out_json);

/// The denoiser named by `spec`. "toy" builds the analytic mixture around
/// the latents of `views`.
std::unique_ptr<DenoiserBackend> make_drag_denoiser(const std::string& spec, const MultiViewImageSet& views,
                                                    double toy_sigma, double toy_view_mixing);

/// Runs the guided edit and writes edited views plus `log_json`.
void stage_drag(const fs::path& views_dir, const fs::path& proj_json, const RunConfig& config, std::uint64_t seed,
                const fs::path& edited_dir, const fs::path& log_json);

void stage_reconstruct(const fs::path& views_dir, const std::string& backend, const RigConfig& rig,
                       const fs::path& out_ply);

void stage_deform(const fs::path& cloud_ply, const fs::path& views_dir, const RunConfig& config, std::uint64_t seed,
                  const fs::path& out_ply, const fs::path& log_json);

/// With the "toy" denoiser, score distillation pulls toward renders of the
/// input cloud itself.
void stage_sds(const fs::path& cloud_ply, const fs::path& views_dir, const RunConfig& config, std::uint64_t seed,
               const fs::path& out_ply, const fs::path& log_json);

/// Renders `cloud_ply` from the rig into `render_dir` and scores it against
/// the original views. When `edited_dir` is non-empty the 2D edit is scored
/// as well.
void stage_evaluate(const fs::path& original_dir, const fs::path& proj_json, const fs::path& cloud_ply,
                    const fs::path& edited_dir, const RigConfig& rig, const fs::path& render_dir,
                    const fs::path& out_json);

/// Writes pretty JSON, creating parent directories.
void write_json(const nlohmann::json& j, const fs::path& path);
nlohmann::json read_json(const fs::path& path);

} // namespace mvdrag
