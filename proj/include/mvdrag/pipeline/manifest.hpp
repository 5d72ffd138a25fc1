#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mvdrag {

/// FNV-1a 64-bit digest as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
/// Digest of a file, or of every regular file under a directory (names and
/// contents, in sorted order). Throws DataError when the path is missing.
std::string hash_path(const std::filesystem::path& path);

enum class StageStatus { Pending, Running, Complete, Failed, Skipped };

std::string to_string(StageStatus status);
StageStatus stage_status_from_string(const std::string& s);

struct Artifact {
    /// Relative to the run's output directory.
    std::string path;
    std::string hash;
};

struct StageRecord {
    std::string name;
    StageStatus status = StageStatus::Pending;
    std::string input_hash;
    std::map<std::string, Artifact> outputs;
    double seconds = 0.0;
    std::string error;
    /// True when the outputs were taken from an earlier run.
    bool reused = false;
};

struct RunManifest {
    nlohmann::json config;
    std::vector<StageRecord> stages;
    /// Chronological record of stage transitions; only ever appended to.
    std::vector<nlohmann::json> events;

    StageRecord* find(const std::string& name);
    const StageRecord* find(const std::string& name) const;
    bool complete() const;
    bool failed() const;
    void record(const std::string& stage, StageStatus status, const std::string& detail = {});
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

inline constexpr const char* kManifestName = "manifest.json";

void save_manifest(const RunManifest& manifest, const std::filesystem::path& dir);
/// Empty optional when the directory has no manifest yet.
std::optional<RunManifest> load_manifest(const std::filesystem::path& dir);

/// Exclusive claim on an output directory, released on destruction. Throws
/// ValidationError while another live process or run holds the directory.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::filesystem::path path_;
};

} // namespace mvdrag
