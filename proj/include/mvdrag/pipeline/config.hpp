#pragma once

#include "mvdrag/dragproject/project.hpp"
#include "mvdrag/guidance/sampler.hpp"
#include "mvdrag/refine/sds.hpp"
#include "mvdrag/render/rig.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace mvdrag {

struct DeformStageConfig {
    int iterations = 2000;
    double lr = 1e-5;
    int bands = 6;
    int hidden = 64;
};

struct RunConfig {
    std::filesystem::path asset;
    std::filesystem::path drags;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;

    /// "toy" or "adapter:<name>[:args]".
    std::string denoiser = "toy";
    /// "unproj" or "adapter:<name>[:args]".
    std::string reconstructor = "unproj";
    std::string perceptual = "l2";
    /// Spread of the toy denoiser's single component around the input latents.
    double toy_sigma = 0.5;
    double toy_view_mixing = 0.25;

    RigConfig rig;
    ProjectionOptions projection;
    GuidanceConfig guidance;
    DeformStageConfig deform;
    SDSConfig sds;

    /// Throws ValidationError if a referenced path is missing or a field is
    /// out of range.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults. Throws FormatError on wrong types.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace mvdrag
