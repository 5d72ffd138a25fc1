#include "mvdrag/core/io.hpp"
#include "mvdrag/core/primitives.hpp"
#include "mvdrag/dragproject/project.hpp"
#include "mvdrag/guidance/ddim.hpp"
#include "mvdrag/guidance/energy.hpp"
#include "mvdrag/guidance/masks.hpp"
#include "mvdrag/guidance/mixture_backend.hpp"
#include "mvdrag/guidance/sampler.hpp"
#include "mvdrag/metrics/dai.hpp"
#include "mvdrag/pipeline/pipeline.hpp"
#include "mvdrag/refine/optimize_positions.hpp"
#include "mvdrag/refine/sds.hpp"
#include "mvdrag/render/mesh_rasterizer.hpp"
#include "mvdrag/render/rasterizer.hpp"

#include "support.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>

using namespace mvdrag;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

LatentStack normal_latent(int h, int w, int c, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> n(0.0, scale);
    LatentStack z(h, w, c);
    for (Eigen::Index i = 0; i < z.data.size(); ++i) z.data(i) = n(rng);
    return z;
}

MixtureModel mixture_for_seed(std::mt19937_64& rng) {
    MixtureModel m;
    for (int k = 0; k < 3; ++k) {
        m.means.push_back(normal_latent(8, 8, 3, rng, 0.5));
        m.weights.push_back(1.0 + k);
        m.sigmas.push_back(0.3 + 0.1 * k);
    }
    return m;
}

Outcome rasterizer_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    GaussianCloud c(3, 0);
    c.positions << 0.1, 0.05, -0.02, -0.15, 0.1, 0.12, 0.05, -0.12, 0.08;
    c.log_scales << std::log(0.12), std::log(0.08), std::log(0.1), std::log(0.1), std::log(0.14), std::log(0.09),
        std::log(0.07), std::log(0.11), std::log(0.13);
    c.rotations << 0.9, 0.1, 0.3, 0.2, 1, 0, 0, 0, 0.8, -0.2, 0.1, 0.4;
    c.opacity_logits << 0.3, -0.2, 0.8;
    c.sh << 0.4, -0.3, 0.6, -0.5, 0.2, 0.1, 0.3, 0.5, -0.4;
    const Camera cam(20, 10, 2.5, 50, 64);
    RenderSettings s;
    s.cutoff_sigma = 8.0;
    RasterTape tape;
    const ViewImage img = rasterize_gaussians(c, cam, s, &tape);
    const CloudGradient g = rasterize_gaussians_backward(c, cam, s, tape, Rgb::Ones(img.pixels(), 3));
    auto sum = [&](const GaussianCloud& x) { return rasterize_gaussians(x, cam, s).rgb.sum(); };

    const double h = 1e-4;
    double worst = 0.0;
    std::string worst_name;
    auto check = [&](auto field, const auto& analytic, const char* name) {
        Eigen::VectorXd a(analytic.size()), fd(analytic.size());
        for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
            for (Eigen::Index k = 0; k < analytic.cols(); ++k) {
                GaussianCloud p = c, m = c;
                field(p)(i, k) += h;
                field(m)(i, k) -= h;
                a(i * analytic.cols() + k) = analytic(i, k);
                fd(i * analytic.cols() + k) = (sum(p) - sum(m)) / (2 * h);
            }
        }
        const double err = (a - fd).norm() / fd.norm();
        if (err > worst) {
            worst = err;
            worst_name = name;
        }
    };
    check([](GaussianCloud& x) -> auto& { return x.positions; }, g.positions, "position");
    check([](GaussianCloud& x) -> auto& { return x.log_scales; }, g.log_scales, "scale");
    check([](GaussianCloud& x) -> auto& { return x.opacity_logits; }, g.opacity_logits, "opacity");
    check([](GaussianCloud& x) -> auto& { return x.sh; }, g.sh, "color");
    const double secs = seconds_since(t0);
    return {worst < 1e-3 && secs < 30.0,
            fmt::format("worst relative error {:.2e} ({}), {:.1f} s", worst, worst_name, secs)};
}

Outcome ddim_round_trip() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const MixtureBackend be = analytic_mixture_backend(mixture_for_seed(rng));
        const DdimGrid grid = DdimGrid::uniform(be.schedule(), 150);
        const LatentStack z0 = ddim_sample(normal_latent(8, 8, 3, rng, 1.0), be, {}, grid);
        const Inversion inv = ddim_invert(z0, be, {}, {150, 3});
        const LatentStack back = ddim_sample(inv.noise(), be, {}, grid);
        worst = std::max(worst, (back.data - z0.data).norm() / z0.data.norm());
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-2 && secs < 60.0, fmt::format("worst relative L2 {:.2e} over 20 seeds, {:.1f} s", worst, secs)};
}

Outcome guidance_efficacy() {
    const auto t0 = std::chrono::steady_clock::now();
    double guided = 0.0, plain = 0.0;
    const GuidanceConfig config;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        const MixtureBackend be = analytic_mixture_backend(mixture_for_seed(rng));
        const DdimGrid grid = DdimGrid::uniform(be.schedule(), config.ddim_steps);
        const LatentStack zT = normal_latent(8, 8, 3, rng, 1.0);
        const LatentStack target = normal_latent(8, 8, 3, rng, 1.0);
        const QuadraticEnergy energy(target);
        guided += (guided_sample(zT, be, &energy, config, {}, grid).latent.data - target.data).norm();
        GuidanceConfig off = config;
        off.eta = 0.0;
        plain += (guided_sample(zT, be, &energy, off, {}, grid).latent.data - target.data).norm();
    }
    const double reduction = 1.0 - guided / plain;
    const double secs = seconds_since(t0);
    return {reduction >= 0.5 && secs < 120.0,
            fmt::format("mean distance {:.3f} guided vs {:.3f} unguided, reduction {:.1f}%, {:.1f} s", guided / 20,
                        plain / 20, 100 * reduction, secs)};
}

Outcome energy_unit_values() {
    const DragSet d = test::single_pair_projection({40, 40}, {200, 180});
    const auto shapes = layer_shapes({1, 8, 16}, 256, 256);
    const EnergyMasks m = build_masks(d, shapes);
    FeatureSet same, ex, ey;
    for (const auto& s : shapes) {
        FeatureMap f;
        f.stride = s.stride;
        f.height = s.height;
        f.width = s.width;
        f.data = Eigen::MatrixXd::Zero(Eigen::Index(kNumViews) * s.height * s.width, 4);
        FeatureMap a = f, b = f;
        a.data.col(0).setOnes();
        b.data.col(2).setOnes();
        f.data.setConstant(0.7);
        same.push_back(f);
        ex.push_back(a);
        ey.push_back(b);
    }
    const double e_same = energy_edit(same, same, m);
    const double e_orth = energy_edit(ex, ey, m);
    return {e_same == 4.0 && e_orth == 8.0, fmt::format("identical {} orthogonal {}", e_same, e_orth)};
}

Outcome occlusion_culling() {
    const auto t0 = std::chrono::steady_clock::now();
    const RigConfig rig;
    const MultiViewImageSet views = render_rig(Asset(make_uv_sphere_mesh(1.0, 256, 512)), rig);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n;
    DragSet d;
    for (int j = 0; j < 50; ++j) {
        Eigen::Vector3d p(n(rng), n(rng), n(rng));
        p.normalize();
        d.pairs.push_back({p, p});
    }
    const ProjectionOptions opts;
    const DragSet out = project_pairs(d, views, rig, opts);
    int agree = 0, total = 0, front = 0, culled_back = 0, back = 0;
    for (int v = 0; v < kNumViews; ++v) {
        const Camera cam = rig.camera(v);
        for (std::size_t j = 0; j < d.size(); ++j) {
            const Eigen::Vector3d& p = d.pairs[j].source;
            const bool oracle = test::sphere_depth_rule_visible(cam, p, opts.depth_tolerance * opts.scene_radius);
            const bool got = out.projections[static_cast<std::size_t>(v)][j].visible;
            ++total;
            agree += oracle == got;
            if (p.dot(cam.center()) > 1.0) front += got;
            if (p.dot(cam.center()) < 0.0) {
                ++back;
                culled_back += !got;
            }
        }
    }
    return {agree == total,
            fmt::format("{}/{} view-handle decisions agree; {} front-facing visible, {}/{} far-side culled, {:.1f} s",
                        agree, total, front, culled_back, back, seconds_since(t0))};
}

double naive_dai(const MultiViewImageSet& orig, const MultiViewImageSet& edit, const DragSet& d, int gamma) {
    double total = 0.0;
    for (int v = 0; v < kNumViews; ++v) {
        const auto& I = orig.views[static_cast<std::size_t>(v)];
        const auto& E = edit.views[static_cast<std::size_t>(v)];
        for (const auto& pp : d.projections[static_cast<std::size_t>(v)]) {
            if (!pp.visible) continue;
            double sum = 0.0;
            int cells = 0;
            for (int dy = -gamma; dy <= gamma; ++dy) {
                for (int dx = -gamma; dx <= gamma; ++dx) {
                    const int px = pp.source_px.x() + dx, py = pp.source_px.y() + dy;
                    const int qx = pp.target_px.x() + dx, qy = pp.target_px.y() + dy;
                    if (!I.contains(px, py) || !E.contains(qx, qy)) continue;
                    ++cells;
                    for (int c = 0; c < 3; ++c) {
                        const double diff = I.rgb(I.index(px, py), c) - E.rgb(E.index(qx, qy), c);
                        sum += diff * diff;
                    }
                }
            }
            if (cells > 0) total += sum / cells;
        }
    }
    return total / kNumViews;
}

Outcome dai_oracle() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> px(0, 255);
    std::bernoulli_distribution vis(0.75);
    double worst = 0.0;
    double identity = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        MultiViewImageSet a, b;
        for (int v = 0; v < kNumViews; ++v) {
            a.views[static_cast<std::size_t>(v)] = test::flat_view(256, 256, 0.0);
            b.views[static_cast<std::size_t>(v)] = test::flat_view(256, 256, 0.0);
            for (Eigen::Index i = 0; i < a.views[0].rgb.size(); ++i) {
                a.views[static_cast<std::size_t>(v)].rgb(i) = u(rng);
                b.views[static_cast<std::size_t>(v)].rgb(i) = u(rng);
            }
        }
        DragSet d;
        for (int j = 0; j < 8; ++j) {
            d.pairs.push_back({Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()});
            for (int v = 0; v < kNumViews; ++v) {
                ProjectedPair pp;
                pp.view = v;
                pp.source_px = {px(rng), px(rng)};
                pp.target_px = {px(rng), px(rng)};
                pp.visible = vis(rng);
                d.projections[static_cast<std::size_t>(v)].push_back(pp);
            }
        }
        for (int g : kDaiGammas) worst = std::max(worst, std::abs(dai(a, b, d, g) - naive_dai(a, b, d, g)));
        DragSet same = d;
        for (auto& view : same.projections) {
            for (auto& pp : view) pp.target_px = pp.source_px;
        }
        for (int g : kDaiGammas) identity = std::max(identity, dai(a, a, same, g));
    }
    return {worst <= 1e-9 && identity == 0.0,
            fmt::format("max deviation from naive loop {:.1e} over 10 pairs x 5 gammas; identity edit {}", worst, identity)};
}

GaussianCloud quadrant_tagged_sphere(int n) {
    GaussianCloud c = make_gaussian_sphere(n, 0.8, 0.06);
    c.view_ids.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double az = std::atan2(-c.positions(i, 2), c.positions(i, 0)) * 180.0 / std::numbers::pi;
        c.view_ids[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(static_cast<int>(std::floor((az + 45.0 + 360.0) / 90.0)) % 4);
    }
    return c;
}

Outcome deformation_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    RigConfig rig;
    rig.resolution = 64;
    const GaussianCloud truth = quadrant_tagged_sphere(500);
    const MultiViewImageSet targets = render_rig(Asset(truth), rig);
    const std::array<Eigen::Vector3d, kNumViews> offsets{Eigen::Vector3d(0.05, 0, 0), Eigen::Vector3d(0, 0.05, 0),
                                                         Eigen::Vector3d(0, 0, 0.05), Eigen::Vector3d(0.03, 0.04, 0)};
    GaussianCloud moved = truth;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        moved.positions.row(i) += offsets[static_cast<std::size_t>(truth.view_ids[static_cast<std::size_t>(i)])].transpose();
    }
    DeformOptions o;
    const DeformResult r = optimize_positions(moved, targets, rig, L2Loss(), o);
    const double rms = std::sqrt((r.cloud.positions - truth.positions).squaredNorm() / static_cast<double>(truth.size()));
    bool windows_decrease = true;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w + 100 <= r.losses.size(); w += 100) {
        double mean = 0.0;
        for (std::size_t k = w; k < w + 100; ++k) mean += r.losses[k];
        mean /= 100.0;
        windows_decrease = windows_decrease && mean <= previous;
        previous = mean;
    }
    const double secs = seconds_since(t0);
    return {rms < 0.01 && secs < 300.0 && windows_decrease,
            fmt::format("residual RMS {:.4f} after {} iterations, loss {:.2e} -> {:.2e}, windowed loss {}, {:.1f} s", rms,
                        o.iterations, r.losses.front(), r.losses.back(),
                        windows_decrease ? "non-increasing" : "increased", secs)};
}

Outcome sds_loop() {
    const auto t0 = std::chrono::steady_clock::now();
    RigConfig rig;
    rig.resolution = 64;
    const GaussianCloud target = make_gaussian_sphere(10, 0.6, 0.25, 0.9);
    GaussianCloud start = target;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    for (Eigen::Index i = 0; i < start.size(); ++i) {
        start.positions.row(i) += 0.1 * Eigen::RowVector3d(n(rng), n(rng), n(rng));
        start.set_base_color(i, Eigen::Vector3d::Constant(0.5));
    }
    const TargetRenderBackend be(target, rig);
    const MultiViewImageSet target_views = be.target_views({});
    auto error = [&](const GaussianCloud& c) {
        double e = 0.0;
        for (int v = 0; v < kNumViews; ++v) {
            e += (rasterize_gaussians(c, rig.camera(v)).rgb - target_views.views[static_cast<std::size_t>(v)].rgb).cwiseAbs().mean();
        }
        return e / kNumViews;
    };
    SDSConfig config;
    config.lambda_perceptual = 0.0;
    const SdsResult r = refine_sds(start, target_views, rig, be, L2Loss(), config);
    const double before = error(start), after = error(r.cloud);
    const double reduction = 1.0 - after / before;

    double trace_dev = 0.0;
    for (const auto& s : r.log) {
        const double expected = 0.49 + (0.02 - 0.49) * s.iteration / static_cast<double>(config.iterations);
        trace_dev = std::max(trace_dev, std::abs(s.t_max - expected));
    }
    const bool endpoints = config.t_max(0) == 0.49 && config.t_max(config.iterations) == 0.02;
    const double secs = seconds_since(t0);
    return {reduction >= 0.3 && trace_dev < 1e-12 && endpoints && secs < 600.0,
            fmt::format("mean pixel error {:.4f} -> {:.4f} ({:.1f}% lower), {} Gaussians; T_max 0.49 -> 0.02 max "
                        "deviation from linear {:.1e}; {:.1f} s",
                        before, after, 100 * reduction, r.cloud.size(), trace_dev, secs)};
}

Outcome end_to_end_determinism() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = test::scratch_dir("acceptance_e2e");
    save_gaussians(make_gaussian_sphere(300, 0.8, 0.08), dir / "asset.ply");
    DragSet d;
    d.frame = DragFrame::Asset;
    d.pairs.push_back({Eigen::Vector3d(0.8, 0.0, 0.0), Eigen::Vector3d(0.8, 0.12, 0.0)});
    d.pairs.push_back({Eigen::Vector3d(0.0, 0.3, 0.75), Eigen::Vector3d(0.0, 0.3, 0.85)});
    save_dragset(d, dir / "drags.json");
    auto run = [&](const std::string& name) {
        RunConfig c;
        c.asset = dir / "asset.ply";
        c.drags = dir / "drags.json";
        c.output_dir = dir / name;
        c.seed = 11;
        c.rig.resolution = 64;
        c.guidance.ddim_steps = 50;
        c.deform.iterations = 100;
        c.sds.iterations = 100;
        const RunManifest m = run_pipeline(c);
        if (!m.complete()) throw std::runtime_error("run " + name + " did not complete");
        std::ifstream in(c.output_dir / "final.ply", std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    try {
        const std::string a = run("first");
        const std::string b = run("second");
        return {!a.empty() && a == b,
                fmt::format("final.ply {} bytes, {}, {:.1f} s", a.size(), a == b ? "byte-identical" : "differs",
                            seconds_since(t0))};
    } catch (const std::exception& e) {
        return {false, e.what()};
    }
}

} // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"rasterizer gradients", rasterizer_gradients},
        {"ddim round-trip", ddim_round_trip},
        {"guidance efficacy", guidance_efficacy},
        {"energy unit values", energy_unit_values},
        {"occlusion culling", occlusion_culling},
        {"dai oracle", dai_oracle},
        {"deformation recovery", deformation_recovery},
        {"sds loop", sds_loop},
        {"end-to-end determinism", end_to_end_determinism},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
