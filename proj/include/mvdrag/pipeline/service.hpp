#pragma once

#include "mvdrag/pipeline/config.hpp"
#include "mvdrag/render/rig.hpp"

#include <json.hpp>

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace mvdrag {

struct ServiceOptions {
    /// Parent of per-run output directories; MVDRAG_ARTIFACT_ROOT when set.
    std::filesystem::path artifact_root;
    /// Asset served by GET /asset/views and used by runs that name none.
    std::optional<std::filesystem::path> asset;
    RigConfig rig;

    /// artifact_root from the environment, "runs" otherwise.
    static std::filesystem::path default_artifact_root();
};

/// HTTP front end over the pipeline. Runs execute one at a time on a
/// background worker in submission order.
class Service {
public:
    explicit Service(ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds to `port` (0 picks a free one) and serves on a background
    /// thread. Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

    /// Queues a run from a request body; returns its id. Throws
    /// ValidationError or FormatError on a bad payload.
    std::string submit(const nlohmann::json& body);
    /// Null when the id is unknown.
    nlohmann::json run_status(const std::string& id) const;

private:
    struct Job {
        std::string id;
        RunConfig config;
        std::string status = "queued";
        std::string error;
        nlohmann::json manifest;
    };

    void routes();
    void worker_loop();
    nlohmann::json asset_views();

    ServiceOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread http_thread_;
    std::thread worker_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    std::map<std::string, Job> jobs_;
    int next_id_ = 1;
    bool stopping_ = false;
    std::mutex views_mutex_;
    std::optional<nlohmann::json> views_cache_;
};

} // namespace mvdrag
