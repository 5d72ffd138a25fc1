#pragma once

#include "mvdrag/pipeline/config.hpp"
#include "mvdrag/pipeline/manifest.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>

namespace mvdrag {

inline constexpr std::array<const char*, 7> kStageNames{"render",  "project", "drag",    "reconstruct",
                                                        "deform", "sds",     "evaluate"};

struct PipelineOptions {
    /// Stop after this stage has completed (later stages stay pending).
    std::optional<std::string> stop_after;
    /// Called whenever the manifest changes.
    std::function<void(const RunManifest&)> on_update;
};

/// Validates the config, locks the output directory and runs every stage in
/// order. A stage whose input hash and output hashes match the existing
/// manifest is reused. A failing stage is recorded with its cause and the
/// remaining stages are marked skipped. Throws ValidationError before any
/// stage runs if the config is invalid or the directory is locked.
RunManifest run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

} // namespace mvdrag
