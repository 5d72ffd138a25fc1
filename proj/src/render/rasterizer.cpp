#include "mvdrag/render/rasterizer.hpp"

#include "mvdrag/core/errors.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvdrag {

namespace {

// Projection inputs differentiated by forward-mode AD: position (3),
// log-scale (3), quaternion (4).
constexpr int kParams = 10;
using Derivatives = Eigen::Matrix<double, kParams, 1>;
using Dual = Eigen::AutoDiffScalar<Derivatives>;

template <int N>
Eigen::Matrix<Dual, N, 1> seed(const Eigen::Matrix<double, N, 1>& value, int offset) {
    Eigen::Matrix<Dual, N, 1> out;
    for (int i = 0; i < N; ++i) out(i) = Dual(value(i), kParams, offset + i);
    return out;
}

void check_finite(const GaussianCloud& cloud) {
    if (!cloud.positions.allFinite() || !cloud.rotations.allFinite() || !cloud.log_scales.allFinite() ||
        !cloud.opacity_logits.allFinite() || !cloud.sh.allFinite()) {
        throw ValidationError("cannot rasterize a gaussian cloud with non-finite parameters");
    }
}

} // namespace

void CloudGradient::reset(const GaussianCloud& cloud) {
    const Eigen::Index n = cloud.size();
    positions.setZero(n, 3);
    rotations.setZero(n, 4);
    log_scales.setZero(n, 3);
    opacity_logits.setZero(n);
    sh.setZero(n, cloud.sh.cols());
    means2d.setZero(n, 2);
}

CloudGradient& CloudGradient::operator+=(const CloudGradient& other) {
    positions += other.positions;
    rotations += other.rotations;
    log_scales += other.log_scales;
    opacity_logits += other.opacity_logits;
    sh += other.sh;
    means2d += other.means2d;
    return *this;
}

bool CloudGradient::all_finite() const {
    return positions.allFinite() && rotations.allFinite() && log_scales.allFinite() && opacity_logits.allFinite() &&
           sh.allFinite();
}

ViewImage rasterize_gaussians(const GaussianCloud& cloud, const Camera& camera, const RenderSettings& settings,
                              RasterTape* tape) {
    check_finite(cloud);
    const int width = camera.width();
    const int height = camera.height();
    ViewImage image(width, height, settings.background);
    if (tape) {
        tape->width = width;
        tape->height = height;
        tape->splats.clear();
        tape->fragments.clear();
    }

    struct Visible {
        Eigen::Index index;
        ProjectedSplat<double> proj;
        int x0, x1, y0, y1;
    };
    std::vector<Visible> visible;
    visible.reserve(static_cast<std::size_t>(cloud.size()));
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        ProjectedSplat<double> proj;
        const Eigen::Vector3d pos = cloud.positions.row(i).transpose();
        const Eigen::Vector3d ls = cloud.log_scales.row(i).transpose();
        const Eigen::Vector4d q = cloud.rotations.row(i).transpose();
        if (!project_splat<double>(pos, ls, q, cloud.sh.row(i), cloud.sh_degree, camera, settings, proj)) continue;
        const double mid = 0.5 * (proj.cov(0) + proj.cov(2));
        const double det = proj.cov(0) * proj.cov(2) - proj.cov(1) * proj.cov(1);
        const double lambda = mid + std::sqrt(std::max(0.0, mid * mid - det));
        const double radius = settings.cutoff_sigma * std::sqrt(lambda);
        const int x0 = std::max(0, static_cast<int>(std::ceil(proj.mean(0) - radius)));
        const int x1 = std::min(width - 1, static_cast<int>(std::floor(proj.mean(0) + radius)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(proj.mean(1) - radius)));
        const int y1 = std::min(height - 1, static_cast<int>(std::floor(proj.mean(1) + radius)));
        if (x0 > x1 || y0 > y1) continue;
        visible.push_back({i, proj, x0, x1, y0, y1});
    }
    std::sort(visible.begin(), visible.end(), [](const Visible& a, const Visible& b) {
        return a.proj.depth < b.proj.depth || (a.proj.depth == b.proj.depth && a.index < b.index);
    });

    Eigen::VectorXd transmittance = Eigen::VectorXd::Ones(image.pixels());
    Eigen::VectorXd depth_sum = Eigen::VectorXd::Zero(image.pixels());
    Rgb color_sum = Rgb::Zero(image.pixels(), 3);
    const double max_power = 0.5 * settings.cutoff_sigma * settings.cutoff_sigma;

    for (const auto& v : visible) {
        const double opacity = cloud.opacity(v.index);
        const auto& c = v.proj.conic;
        const std::size_t begin = tape ? tape->fragments.size() : 0;
        for (int y = v.y0; y <= v.y1; ++y) {
            const double dy = y - v.proj.mean(1);
            for (int x = v.x0; x <= v.x1; ++x) {
                const double dx = x - v.proj.mean(0);
                const double power = 0.5 * (c(0) * dx * dx + c(2) * dy * dy) + c(1) * dx * dy;
                if (power > max_power) continue;
                const double alpha = opacity * std::exp(-power);
                const Eigen::Index p = image.index(x, y);
                const double weight = alpha * transmittance(p);
                color_sum.row(p) += weight * v.proj.color.transpose();
                depth_sum(p) += weight * v.proj.depth;
                if (tape) tape->fragments.push_back({static_cast<std::int32_t>(p), alpha, transmittance(p)});
                transmittance(p) *= 1.0 - alpha;
            }
        }
        if (tape) tape->splats.push_back({v.index, v.proj, opacity, begin, tape->fragments.size()});
    }

    for (Eigen::Index p = 0; p < image.pixels(); ++p) {
        const double t = transmittance(p);
        image.rgb.row(p) = color_sum.row(p).array() + t * settings.background;
        image.alpha(p) = 1.0 - t;
        if (t < 1.0) image.depth(p) = depth_sum(p) / (1.0 - t);
    }
    return image;
}

CloudGradient rasterize_gaussians_backward(const GaussianCloud& cloud, const Camera& camera,
                                           const RenderSettings& settings, const RasterTape& tape, const Rgb& grad_rgb,
                                           const Eigen::VectorXd* grad_alpha) {
    const Eigen::Index pixels = Eigen::Index(tape.width) * tape.height;
    if (grad_rgb.rows() != pixels) throw ValidationError("rgb gradient does not match the rendered image");
    if (grad_alpha && grad_alpha->size() != pixels) throw ValidationError("alpha gradient does not match the rendered image");

    CloudGradient grad(cloud);
    // Color and alpha of everything behind the current splat, as seen from it.
    Rgb behind = Rgb::Constant(pixels, 3, settings.background);
    Eigen::VectorXd behind_alpha = Eigen::VectorXd::Zero(pixels);
    const int k = cloud.coeffs_per_channel();

    for (auto it = tape.splats.rbegin(); it != tape.splats.rend(); ++it) {
        const auto& s = *it;
        const auto& c = s.proj.conic;
        Eigen::Vector2d d_mean = Eigen::Vector2d::Zero();
        Eigen::Vector3d d_conic = Eigen::Vector3d::Zero();
        Eigen::Vector3d d_color = Eigen::Vector3d::Zero();
        double d_opacity = 0.0;

        for (std::size_t f = s.begin; f < s.end; ++f) {
            const auto& frag = tape.fragments[f];
            const Eigen::Index p = frag.pixel;
            const double a = frag.alpha;
            const double t = frag.transmittance;
            const Eigen::RowVector3d g = grad_rgb.row(p);

            double d_alpha = t * g.dot(s.proj.color.transpose() - behind.row(p));
            if (grad_alpha) d_alpha += (*grad_alpha)(p) * t * (1.0 - behind_alpha(p));
            d_color += (a * t) * g.transpose();

            behind.row(p) = a * s.proj.color.transpose() + (1.0 - a) * behind.row(p);
            behind_alpha(p) = a + (1.0 - a) * behind_alpha(p);

            const double gauss = a / s.opacity;
            d_opacity += d_alpha * gauss;
            const double d_power = -d_alpha * s.opacity * gauss;
            const double dx = static_cast<double>(p % tape.width) - s.proj.mean(0);
            const double dy = static_cast<double>(p / tape.width) - s.proj.mean(1);
            // power = 0.5 (a dx^2 + c dy^2) + b dx dy, with dx = x - mean_x.
            d_mean(0) -= d_power * (c(0) * dx + c(1) * dy);
            d_mean(1) -= d_power * (c(1) * dx + c(2) * dy);
            d_conic(0) += d_power * 0.5 * dx * dx;
            d_conic(1) += d_power * dx * dy;
            d_conic(2) += d_power * 0.5 * dy * dy;
        }

        const Eigen::Index i = s.index;
        const double sig = s.opacity;
        grad.opacity_logits(i) += d_opacity * sig * (1.0 - sig);
        grad.means2d.row(i) += d_mean.transpose();
        for (int ch = 0; ch < 3; ++ch) d_color(ch) = s.proj.color_clamped[static_cast<std::size_t>(ch)] ? 0.0 : d_color(ch);

        // Chain the screen-space gradient through the projection Jacobian.
        ProjectedSplat<Dual> dual;
        const Eigen::Vector3d pos = cloud.positions.row(i).transpose();
        const Eigen::Vector3d ls = cloud.log_scales.row(i).transpose();
        const Eigen::Vector4d q = cloud.rotations.row(i).transpose();
        project_splat<Dual>(seed<3>(pos, 0), seed<3>(ls, 3), seed<4>(q, 6), cloud.sh.row(i), cloud.sh_degree, camera,
                            settings, dual);
        Derivatives total = Derivatives::Zero();
        for (int a = 0; a < 2; ++a) total += d_mean(a) * dual.mean(a).derivatives();
        for (int a = 0; a < 3; ++a) total += d_conic(a) * dual.conic(a).derivatives();
        for (int a = 0; a < 3; ++a) {
            if (!s.proj.color_clamped[static_cast<std::size_t>(a)]) total += d_color(a) * dual.color(a).derivatives();
        }
        grad.positions.row(i) += total.segment<3>(0).transpose();
        grad.log_scales.row(i) += total.segment<3>(3).transpose();
        grad.rotations.row(i) += total.segment<4>(6).transpose();

        const Eigen::Vector3d cam = camera.center();
        const Eigen::Vector3d dir = (pos - cam).normalized();
        const auto basis = sh_basis(dir, cloud.sh_degree);
        for (int j = 0; j < k; ++j) {
            for (int ch = 0; ch < 3; ++ch) grad.sh(i, j * 3 + ch) += d_color(ch) * basis[static_cast<std::size_t>(j)];
        }
    }
    return grad;
}

} // namespace mvdrag
