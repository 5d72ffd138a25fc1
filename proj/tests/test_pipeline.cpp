#include "mvdrag/core/errors.hpp"
#include "mvdrag/core/io.hpp"
#include "mvdrag/core/primitives.hpp"
#include "mvdrag/pipeline/config.hpp"
#include "mvdrag/pipeline/manifest.hpp"
#include "mvdrag/pipeline/pipeline.hpp"
#include "mvdrag/pipeline/service.hpp"
#include "mvdrag/pipeline/stages.hpp"

#include "support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <chrono>
#include <fstream>
#include <set>
#include <thread>

using namespace mvdrag;

namespace {

/// A tiny asset plus drags and a config fast enough for unit tests.
RunConfig small_run(const std::filesystem::path& dir) {
    save_gaussians(make_gaussian_sphere(60, 0.7, 0.12), dir / "asset.ply");
    DragSet d;
    d.pairs.push_back({Eigen::Vector3d(1.0, 0.0, 0.0), Eigen::Vector3d(1.0, 0.15, 0.0)});
    save_dragset(d, dir / "drags.json");
    RunConfig c;
    c.asset = dir / "asset.ply";
    c.drags = dir / "drags.json";
    c.output_dir = dir / "out";
    c.seed = 3;
    c.rig.resolution = 16;
    c.guidance.ddim_steps = 6;
    c.deform.iterations = 3;
    c.sds.iterations = 3;
    c.sds.densify_interval = 2;
    return c;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST(RunConfig, MissingPathsFailValidation) {
    RunConfig c;
    c.asset = "/nonexistent/asset.ply";
    c.drags = "/nonexistent/drags.json";
    c.output_dir = "/tmp/x";
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(RunConfig, JsonRoundTripResolvesRelativePaths) {
    const auto dir = test::scratch_dir("config_rt");
    RunConfig c = small_run(dir);
    c.guidance.alpha = 2.5;
    c.sds.t_min = 0.01;
    nlohmann::json j = to_json(c);
    j["asset"] = "asset.ply";
    j["drags"] = "drags.json";
    j["output_dir"] = "out";
    {
        std::ofstream out(dir / "run.json");
        out << j.dump(2);
    }
    const RunConfig r = load_run_config(dir / "run.json");
    EXPECT_EQ(r.asset, dir / "asset.ply");
    EXPECT_EQ(r.output_dir, dir / "out");
    EXPECT_EQ(r.guidance.alpha, 2.5);
    EXPECT_EQ(r.sds.t_min, 0.01);
    EXPECT_EQ(r.rig.resolution, 16);
    EXPECT_NO_THROW(r.validate());
}

TEST(RunConfig, WrongTypeIsFormatError) {
    EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"seed": "seven"})")), FormatError);
}

TEST(Manifest, HashesAreStable) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
    const auto dir = test::scratch_dir("hash");
    std::filesystem::create_directories(dir / "d");
    {
        std::ofstream(dir / "d" / "b.txt") << "two";
        std::ofstream(dir / "d" / "a.txt") << "one";
    }
    const std::string h = hash_path(dir / "d");
    EXPECT_EQ(h, hash_path(dir / "d"));
    std::ofstream(dir / "d" / "a.txt") << "changed";
    EXPECT_NE(h, hash_path(dir / "d"));
    EXPECT_THROW(hash_path(dir / "missing"), DataError);
}

TEST(Manifest, JsonRoundTrip) {
    const auto dir = test::scratch_dir("manifest");
    RunManifest m;
    m.config = {{"seed", 1}};
    StageRecord s;
    s.name = "render";
    s.status = StageStatus::Complete;
    s.input_hash = "abc";
    s.outputs["views"] = {"views", "123"};
    m.stages.push_back(s);
    m.record("render", StageStatus::Complete, "ok");
    save_manifest(m, dir);
    const auto r = load_manifest(dir);
    ASSERT_TRUE(r.has_value());
    ASSERT_NE(r->find("render"), nullptr);
    EXPECT_EQ(r->find("render")->outputs.at("views").hash, "123");
    EXPECT_EQ(r->events.size(), 1u);
    EXPECT_FALSE(load_manifest(dir / "nothing").has_value());
}

TEST(OutputLock, SecondClaimIsRejectedUntilReleased) {
    const auto dir = test::scratch_dir("lock");
    {
        OutputLock first(dir);
        EXPECT_THROW(OutputLock second(dir), ValidationError);
    }
    EXPECT_NO_THROW(OutputLock again(dir));
}

TEST(Pipeline, SmallToyRunCompletesAndResumes) {
    const auto dir = test::scratch_dir("pipeline_run");
    const RunConfig c = small_run(dir);
    const RunManifest m = run_pipeline(c);
    ASSERT_TRUE(m.complete()) << to_json(m).dump(2);
    ASSERT_EQ(m.stages.size(), kStageNames.size());
    for (std::size_t i = 0; i < kStageNames.size(); ++i) EXPECT_EQ(m.stages[i].name, kStageNames[i]);
    for (const char* f : {"proj.json", "fused.ply", "deformed.ply", "final.ply", "dai.json", "manifest.json"}) {
        EXPECT_TRUE(std::filesystem::exists(c.output_dir / f)) << f;
    }
    const auto report = read_json(c.output_dir / "dai.json");
    EXPECT_TRUE(report.contains("dai"));
    EXPECT_TRUE(report["elo"].is_null());

    const std::string final_bytes = read_file(c.output_dir / "final.ply");
    const RunManifest again = run_pipeline(c);
    for (const auto& s : again.stages) EXPECT_TRUE(s.reused) << s.name;
    EXPECT_EQ(read_file(c.output_dir / "final.ply"), final_bytes);

    // Changing a late-stage setting reruns only that stage and its dependents.
    RunConfig changed = c;
    changed.sds.iterations = 2;
    const RunManifest partial = run_pipeline(changed);
    EXPECT_TRUE(partial.find("deform")->reused);
    EXPECT_FALSE(partial.find("sds")->reused);
    EXPECT_FALSE(partial.find("evaluate")->reused);
}

TEST(Pipeline, StopAfterLeavesLaterStagesPending) {
    const auto dir = test::scratch_dir("pipeline_stop");
    const RunConfig c = small_run(dir);
    PipelineOptions o;
    o.stop_after = "project";
    const RunManifest m = run_pipeline(c, o);
    EXPECT_EQ(m.find("project")->status, StageStatus::Complete);
    EXPECT_EQ(m.find("drag")->status, StageStatus::Pending);
    EXPECT_FALSE(m.complete());
}

TEST(Pipeline, FailingStageSkipsTheRest) {
    const auto dir = test::scratch_dir("pipeline_fail");
    RunConfig c = small_run(dir);
    c.denoiser = "adapter:not-registered";
    const RunManifest m = run_pipeline(c);
    EXPECT_TRUE(m.failed());
    EXPECT_EQ(m.find("drag")->status, StageStatus::Failed);
    EXPECT_FALSE(m.find("drag")->error.empty());
    EXPECT_EQ(m.find("evaluate")->status, StageStatus::Skipped);
}

TEST(Pipeline, LockedDirectoryIsRejected) {
    const auto dir = test::scratch_dir("pipeline_lock");
    const RunConfig c = small_run(dir);
    std::filesystem::create_directories(c.output_dir);
    OutputLock held(c.output_dir);
    EXPECT_THROW(run_pipeline(c), ValidationError);
}

namespace {

nlohmann::json wait_for(httplib::Client& cli, const std::string& id, std::set<std::string>& seen) {
    nlohmann::json status;
    for (int i = 0; i < 600; ++i) {
        auto res = cli.Get("/runs/" + id);
        EXPECT_TRUE(res);
        if (!res) break;
        status = nlohmann::json::parse(res->body);
        seen.insert(status["status"].get<std::string>());
        if (status["status"] == "complete" || status["status"] == "failed") break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return status;
}

} // namespace

TEST(Service, EndpointsDriveARun) {
    const auto dir = test::scratch_dir("service");
    const RunConfig base = small_run(dir);
    ServiceOptions o;
    o.artifact_root = dir / "runs";
    o.asset = base.asset;
    o.rig = base.rig;
    Service service(o);
    const int port = service.start();
    httplib::Client cli("127.0.0.1", port);

    auto views = cli.Get("/asset/views");
    ASSERT_TRUE(views);
    EXPECT_EQ(views->status, 200);
    const auto vj = nlohmann::json::parse(views->body);
    ASSERT_EQ(vj["views"].size(), 4u);
    for (const auto& v : vj["views"]) {
        EXPECT_FALSE(v["image_png_base64"].get<std::string>().empty());
        EXPECT_FALSE(v["depth"]["data_base64"].get<std::string>().empty());
    }

    auto empty = cli.Post("/drags", R"({"pairs": []})", "application/json");
    ASSERT_TRUE(empty);
    EXPECT_EQ(empty->status, 422);
    auto malformed = cli.Post("/drags", R"({"pairs": [)", "application/json");
    ASSERT_TRUE(malformed);
    EXPECT_EQ(malformed->status, 400);
    auto good = cli.Post("/drags", read_file(base.drags), "application/json");
    ASSERT_TRUE(good);
    EXPECT_EQ(good->status, 200);
    EXPECT_TRUE(nlohmann::json::parse(good->body).contains("projections"));

    nlohmann::json req = to_json(base);
    req.erase("output_dir");
    req["drags"] = nlohmann::json::parse(read_file(base.drags));
    auto posted = cli.Post("/runs", req.dump(), "application/json");
    ASSERT_TRUE(posted);
    ASSERT_EQ(posted->status, 202) << posted->body;
    const auto id = nlohmann::json::parse(posted->body)["id"].get<std::string>();
    std::set<std::string> seen;
    const auto final_status = wait_for(cli, id, seen);
    EXPECT_EQ(final_status["status"], "complete") << final_status.dump(2);
    EXPECT_TRUE(seen.count("complete"));

    auto report = cli.Get("/runs/" + id + "/artifacts/dai.json");
    ASSERT_TRUE(report);
    EXPECT_EQ(report->status, 200);
    auto escape = cli.Get("/runs/" + id + "/artifacts/..%2F..%2Fasset.ply");
    ASSERT_TRUE(escape);
    EXPECT_EQ(escape->status, 404);
    auto unknown = cli.Get("/runs/run-9999");
    ASSERT_TRUE(unknown);
    EXPECT_EQ(unknown->status, 404);
    service.stop();
}

TEST(Service, RejectsDuplicateActiveOutputDirectory) {
    const auto dir = test::scratch_dir("service_dup");
    const RunConfig base = small_run(dir);
    ServiceOptions o;
    o.artifact_root = dir / "runs";
    Service service(o);
    nlohmann::json req = to_json(base);
    req["sds"]["iterations"] = 50;
    service.submit(req);
    EXPECT_THROW(service.submit(req), ValidationError);
    EXPECT_TRUE(service.run_status("nope").is_null());
}
