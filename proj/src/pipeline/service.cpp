#include "mvdrag/pipeline/service.hpp"

#include "mvdrag/core/errors.hpp"
#include "mvdrag/core/io.hpp"
#include "mvdrag/dragproject/project.hpp"
#include "mvdrag/pipeline/pipeline.hpp"
#include "mvdrag/pipeline/stages.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mvdrag {

namespace {

void reply_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    reply_json(res, status, {{"error", message}, {"kind", kind}});
}

std::string content_type(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".png") return "image/png";
    if (ext == ".json") return "application/json";
    return "application/octet-stream";
}

bool inside(const std::filesystem::path& root, const std::filesystem::path& p) {
    const auto r = std::filesystem::weakly_canonical(root);
    const auto c = std::filesystem::weakly_canonical(p);
    auto [a, b] = std::mismatch(r.begin(), r.end(), c.begin(), c.end());
    return a == r.end();
}

} // namespace

std::filesystem::path ServiceOptions::default_artifact_root() {
    if (const char* env = std::getenv("MVDRAG_ARTIFACT_ROOT"); env && *env) return env;
    return "runs";
}

Service::Service(ServiceOptions options) : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    if (options_.artifact_root.empty()) options_.artifact_root = ServiceOptions::default_artifact_root();
    options_.rig.validate();
    routes();
    worker_ = std::thread([this] { worker_loop(); });
}

Service::~Service() {
    stop();
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

int Service::start(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw ValidationError("cannot bind " + host + ":" + std::to_string(port));
    http_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void Service::listen(const std::string& host, int port) {
    if (!server_->listen(host, port)) throw ValidationError("cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
    if (server_) server_->stop();
    if (http_thread_.joinable()) http_thread_.join();
}

nlohmann::json Service::asset_views() {
    std::lock_guard lock(views_mutex_);
    if (views_cache_) return *views_cache_;
    if (!options_.asset) throw ValidationError("the service was started without an asset");
    const MultiViewImageSet views = render_rig(load_asset(*options_.asset), options_.rig);
    nlohmann::json j{{"resolution", options_.rig.resolution}, {"background", options_.rig.background}};
    j["views"] = nlohmann::json::array();
    for (int v = 0; v < kNumViews; ++v) {
        const Camera cam = options_.rig.camera(v);
        const ViewImage& view = views.views[static_cast<std::size_t>(v)];
        std::string depth(static_cast<std::size_t>(view.pixels()) * sizeof(float), '\0');
        for (Eigen::Index i = 0; i < view.pixels(); ++i) {
            const float d = static_cast<float>(view.depth(i));
            std::memcpy(depth.data() + i * static_cast<Eigen::Index>(sizeof(float)), &d, sizeof(float));
        }
        j["views"].push_back({
            {"view", v},
            {"camera",
             {{"azimuth", cam.azimuth()},
              {"elevation", cam.elevation()},
              {"distance", cam.distance()},
              {"fov_y", cam.fov_y()},
              {"focal", cam.focal()},
              {"cx", cam.cx()},
              {"cy", cam.cy()}}},
            {"image_png_base64", httplib::detail::base64_encode(encode_png(view.rgb, view.width, view.height))},
            {"depth",
             {{"dtype", "float32"},
              {"byte_order", "little"},
              {"shape", {view.height, view.width}},
              {"data_base64", httplib::detail::base64_encode(depth)}}},
        });
    }
    views_cache_ = j;
    return j;
}

std::string Service::submit(const nlohmann::json& body) {
    if (!body.is_object()) throw FormatError("run request must be a JSON object");
    std::string id;
    {
        std::lock_guard lock(mutex_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "run-%04d", next_id_++);
        id = buf;
    }
    nlohmann::json cfg = body;
    const auto run_dir = options_.artifact_root / id;
    if (!cfg.contains("output_dir")) cfg["output_dir"] = run_dir.string();
    if (!cfg.contains("asset") && options_.asset) cfg["asset"] = options_.asset->string();
    if (cfg.contains("drags") && cfg["drags"].is_object()) {
        const DragSet inline_drags = dragset_from_json(cfg["drags"]);
        validate(inline_drags);
        const auto path = options_.artifact_root / (id + ".drags.json");
        write_json(to_json(inline_drags), path);
        cfg["drags"] = path.string();
    }
    RunConfig config = run_config_from_json(cfg);
    config.validate();
    {
        std::lock_guard lock(mutex_);
        for (const auto& [other, job] : jobs_) {
            if ((job.status == "queued" || job.status == "running") &&
                std::filesystem::weakly_canonical(job.config.output_dir) ==
                    std::filesystem::weakly_canonical(config.output_dir)) {
                throw ValidationError("output directory is already used by " + other);
            }
        }
        Job job;
        job.id = id;
        job.config = std::move(config);
        jobs_[id] = std::move(job);
        queue_.push_back(id);
    }
    cv_.notify_one();
    return id;
}

nlohmann::json Service::run_status(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return nullptr;
    nlohmann::json j{{"id", id}, {"status", it->second.status}, {"manifest", it->second.manifest}};
    if (!it->second.error.empty()) j["error"] = it->second.error;
    return j;
}

void Service::worker_loop() {
    for (;;) {
        std::string id;
        RunConfig config;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
            jobs_[id].status = "running";
            config = jobs_[id].config;
        }
        PipelineOptions options;
        options.on_update = [this, id](const RunManifest& m) {
            std::lock_guard lock(mutex_);
            jobs_[id].manifest = to_json(m);
        };
        std::string status = "complete";
        std::string error;
        try {
            const RunManifest m = run_pipeline(config, options);
            if (!m.complete()) {
                status = "failed";
                for (const auto& s : m.stages) {
                    if (s.status == StageStatus::Failed) error = s.name + ": " + s.error;
                }
            }
        } catch (const std::exception& e) {
            status = "failed";
            error = e.what();
        }
        spdlog::info("{} {}", id, status);
        std::lock_guard lock(mutex_);
        jobs_[id].status = status;
        jobs_[id].error = error;
    }
}

void Service::routes() {
    auto& s = *server_;

    s.Get("/asset/views", [this](const httplib::Request&, httplib::Response& res) {
        try {
            reply_json(res, 200, asset_views());
        } catch (const ValidationError& e) {
            reply_error(res, 404, "validation", e.what());
        } catch (const std::exception& e) {
            reply_error(res, 500, "internal", e.what());
        }
    });

    s.Post("/drags", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            const auto body = nlohmann::json::parse(req.body);
            DragSet drags = dragset_from_json(body);
            validate(drags);
            nlohmann::json out{{"valid", true}, {"pairs", drags.size()}};
            if (options_.asset && drags.frame == DragFrame::Normalized) {
                const MultiViewImageSet views = render_rig(load_asset(*options_.asset), options_.rig);
                out["projections"] = projections_to_json(project_pairs(drags, views, options_.rig), options_.rig.resolution);
            }
            reply_json(res, 200, out);
        } catch (const nlohmann::json::exception& e) {
            reply_error(res, 400, "format", std::string("malformed JSON: ") + e.what());
        } catch (const FormatError& e) {
            reply_error(res, 400, "format", e.what());
        } catch (const ValidationError& e) {
            reply_error(res, 422, "validation", e.what());
        } catch (const DataError& e) {
            reply_error(res, 422, "data", e.what());
        }
    });

    s.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            const std::string id = submit(nlohmann::json::parse(req.body));
            reply_json(res, 202, {{"id", id}, {"status", "queued"}});
        } catch (const nlohmann::json::exception& e) {
            reply_error(res, 400, "format", std::string("malformed JSON: ") + e.what());
        } catch (const FormatError& e) {
            reply_error(res, 400, "format", e.what());
        } catch (const ValidationError& e) {
            reply_error(res, 422, "validation", e.what());
        } catch (const DataError& e) {
            reply_error(res, 422, "data", e.what());
        }
    });

    s.Get(R"(/runs/([\w-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto status = run_status(req.matches[1]);
        if (status.is_null()) return reply_error(res, 404, "not_found", "unknown run id");
        reply_json(res, 200, status);
    });

    s.Get(R"(/runs/([\w-]+)/artifacts/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::filesystem::path dir;
        {
            std::lock_guard lock(mutex_);
            const auto it = jobs_.find(req.matches[1]);
            if (it == jobs_.end()) return reply_error(res, 404, "not_found", "unknown run id");
            dir = it->second.config.output_dir;
        }
        const auto path = dir / std::string(req.matches[2]);
        if (!inside(dir, path) || !std::filesystem::is_regular_file(path)) {
            return reply_error(res, 404, "not_found", "no artifact named '" + std::string(req.matches[2]) + "'");
        }
        std::ifstream in(path, std::ios::binary);
        const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        res.set_content(bytes, content_type(path));
    });
}

} // namespace mvdrag
