#include "mvdrag/pipeline/manifest.hpp"

#include "mvdrag/core/errors.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

namespace mvdrag {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t fnv1a_file(std::uint64_t h, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h = fnv1a(h, buf, static_cast<std::size_t>(in.gcount()));
    }
    return h;
}

std::string hex(std::uint64_t h) {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

} // namespace

std::string fnv1a_hex(const std::string& bytes) { return hex(fnv1a(kFnvOffset, bytes.data(), bytes.size())); }

std::string hash_path(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(path)) return hex(fnv1a_file(kFnvOffset, path));
    if (!fs::is_directory(path)) throw DataError("missing artifact '" + path.string() + "'");
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = kFnvOffset;
    for (const auto& f : files) {
        const std::string rel = fs::relative(f, path).generic_string();
        h = fnv1a(h, rel.data(), rel.size() + 1);
        h = fnv1a_file(h, f);
    }
    return hex(h);
}

std::string to_string(StageStatus s) {
    switch (s) {
    case StageStatus::Pending: return "pending";
    case StageStatus::Running: return "running";
    case StageStatus::Complete: return "complete";
    case StageStatus::Failed: return "failed";
    case StageStatus::Skipped: return "skipped";
    }
    return "pending";
}

StageStatus stage_status_from_string(const std::string& s) {
    for (auto st : {StageStatus::Pending, StageStatus::Running, StageStatus::Complete, StageStatus::Failed,
                    StageStatus::Skipped}) {
        if (to_string(st) == s) return st;
    }
    throw FormatError("unknown stage status '" + s + "'");
}

StageRecord* RunManifest::find(const std::string& name) {
    for (auto& s : stages) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

const StageRecord* RunManifest::find(const std::string& name) const {
    return const_cast<RunManifest*>(this)->find(name);
}

bool RunManifest::complete() const {
    return !stages.empty() &&
           std::all_of(stages.begin(), stages.end(), [](const auto& s) { return s.status == StageStatus::Complete; });
}

bool RunManifest::failed() const {
    return std::any_of(stages.begin(), stages.end(), [](const auto& s) { return s.status == StageStatus::Failed; });
}

void RunManifest::record(const std::string& stage, StageStatus status, const std::string& detail) {
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    nlohmann::json e{{"stage", stage}, {"status", to_string(status)}, {"unix_ms", now}};
    if (!detail.empty()) e["detail"] = detail;
    events.push_back(std::move(e));
}

nlohmann::json to_json(const RunManifest& m) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : m.stages) {
        nlohmann::json outputs = nlohmann::json::object();
        for (const auto& [name, a] : s.outputs) outputs[name] = {{"path", a.path}, {"hash", a.hash}};
        nlohmann::json entry{{"name", s.name},         {"status", to_string(s.status)}, {"input_hash", s.input_hash},
                             {"outputs", outputs},     {"seconds", s.seconds},          {"reused", s.reused}};
        if (!s.error.empty()) entry["error"] = s.error;
        stages.push_back(std::move(entry));
    }
    return {{"config", m.config}, {"stages", stages}, {"events", m.events}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
        m.config = j.value("config", nlohmann::json::object());
        for (const auto& s : j.at("stages")) {
            StageRecord r;
            r.name = s.at("name").get<std::string>();
            r.status = stage_status_from_string(s.at("status").get<std::string>());
            r.input_hash = s.value("input_hash", std::string());
            r.seconds = s.value("seconds", 0.0);
            r.error = s.value("error", std::string());
            r.reused = s.value("reused", false);
            for (const auto& [name, a] : s.at("outputs").items()) {
                r.outputs[name] = {a.at("path").get<std::string>(), a.at("hash").get<std::string>()};
            }
            m.stages.push_back(std::move(r));
        }
        for (const auto& e : j.value("events", nlohmann::json::array())) m.events.push_back(e);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
    return m;
}

void save_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
    const auto tmp = dir / (std::string(kManifestName) + ".tmp");
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("cannot write manifest in '" + dir.string() + "'");
        out << to_json(manifest).dump(2) << '\n';
    }
    std::filesystem::rename(tmp, dir / kManifestName);
}

std::optional<RunManifest> load_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / kManifestName);
    if (!in) return std::nullopt;
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
    return manifest_from_json(j);
}

namespace {

std::mutex& held_mutex() {
    static std::mutex m;
    return m;
}

std::set<std::string>& held_locks() {
    static std::set<std::string> s;
    return s;
}

bool process_alive(pid_t pid) { return pid > 0 && (kill(pid, 0) == 0 || errno == EPERM); }

} // namespace

OutputLock::OutputLock(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    path_ = std::filesystem::weakly_canonical(dir / ".mvdrag.lock");
    std::lock_guard guard(held_mutex());
    if (held_locks().count(path_.string())) {
        throw ValidationError("output directory '" + dir.string() + "' is already in use by another run");
    }
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd >= 0) {
            const std::string pid = std::to_string(::getpid());
            const auto written = ::write(fd, pid.data(), pid.size());
            ::close(fd);
            if (written != static_cast<ssize_t>(pid.size())) throw DataError("cannot write lock file");
            held_locks().insert(path_.string());
            return;
        }
        std::ifstream in(path_);
        long owner = 0;
        in >> owner;
        if (process_alive(static_cast<pid_t>(owner)) && owner != ::getpid()) {
            throw ValidationError("output directory '" + dir.string() + "' is locked by process " +
                                  std::to_string(owner));
        }
        std::filesystem::remove(path_);
    }
    throw ValidationError("cannot lock output directory '" + dir.string() + "'");
}

OutputLock::~OutputLock() {
    std::lock_guard guard(held_mutex());
    std::error_code ec;
    std::filesystem::remove(path_, ec);
    held_locks().erase(path_.string());
}

} // namespace mvdrag
