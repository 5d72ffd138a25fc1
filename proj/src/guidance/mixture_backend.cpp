#include "mvdrag/guidance/mixture_backend.hpp"

#include "mvdrag/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mvdrag {

Eigen::MatrixXd pool_views(const Eigen::MatrixXd& data, int height, int width, int stride) {
    if (stride == 1) return data;
    const int h = height / stride;
    const int w = width / stride;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Eigen::Index(kNumViews) * h * w, data.cols());
    const double inv = 1.0 / (stride * stride);
    for (int v = 0; v < kNumViews; ++v) {
        for (int y = 0; y < h * stride; ++y) {
            for (int x = 0; x < w * stride; ++x) {
                const Eigen::Index src = (Eigen::Index(v) * height + y) * width + x;
                const Eigen::Index dst = (Eigen::Index(v) * h + y / stride) * w + x / stride;
                out.row(dst) += inv * data.row(src);
            }
        }
    }
    return out;
}

Eigen::MatrixXd unpool_views(const Eigen::MatrixXd& pooled, int height, int width, int stride) {
    if (stride == 1) return pooled;
    const int h = height / stride;
    const int w = width / stride;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Eigen::Index(kNumViews) * height * width, pooled.cols());
    const double inv = 1.0 / (stride * stride);
    for (int v = 0; v < kNumViews; ++v) {
        for (int y = 0; y < h * stride; ++y) {
            for (int x = 0; x < w * stride; ++x) {
                const Eigen::Index dst = (Eigen::Index(v) * height + y) * width + x;
                const Eigen::Index src = (Eigen::Index(v) * h + y / stride) * w + x / stride;
                out.row(dst) = inv * pooled.row(src);
            }
        }
    }
    return out;
}

namespace {

void check_model(const MixtureModel& m, const MixtureBackendOptions& options) {
    if (m.means.empty()) throw ValidationError("mixture needs at least one component");
    if (m.weights.size() != m.means.size() || m.sigmas.size() != m.means.size()) {
        throw ValidationError("mixture means, weights and sigmas differ in length");
    }
    for (std::size_t k = 0; k < m.means.size(); ++k) {
        if (!m.means[k].same_shape(m.means[0]) || m.means[k].data.rows() != m.means[0].data.rows()) {
            throw ValidationError("mixture means differ in shape");
        }
        if (!m.means[k].data.allFinite()) throw ValidationError("mixture mean is not finite");
        if (!(m.weights[k] > 0.0) || !std::isfinite(m.weights[k])) throw ValidationError("mixture weights must be positive");
        if (!(m.sigmas[k] > 0.0) || !std::isfinite(m.sigmas[k])) throw ValidationError("mixture sigma must be positive");
    }
    if (!(options.view_mixing >= 0.0 && options.view_mixing <= 1.0)) {
        throw ValidationError("view mixing must lie in [0, 1]");
    }
    if (options.feature_strides.empty()) throw ValidationError("backend needs at least one feature layer");
    for (int s : options.feature_strides) {
        if (s < 1 || m.means[0].height % s != 0 || m.means[0].width % s != 0) {
            throw ValidationError("feature stride must divide the latent resolution");
        }
    }
}

} // namespace

MixtureBackend::MixtureBackend(MixtureModel model, NoiseSchedule schedule, MixtureBackendOptions options)
    : model_(std::move(model)), schedule_(std::move(schedule)), options_(std::move(options)) {
    check_model(model_, options_);
}

LatentStack MixtureBackend::score(const LatentStack& z, double alpha_bar) const {
    const std::size_t K = model_.means.size();
    const double d = static_cast<double>(z.data.size());
    const double sa = std::sqrt(alpha_bar);
    std::vector<double> logr(K);
    std::vector<double> var(K);
    double maxlog = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        var[k] = alpha_bar * model_.sigmas[k] * model_.sigmas[k] + (1.0 - alpha_bar);
        const double sq = (z.data - sa * model_.means[k].data).squaredNorm();
        logr[k] = std::log(model_.weights[k]) - 0.5 * d * std::log(var[k]) - 0.5 * sq / var[k];
        maxlog = std::max(maxlog, logr[k]);
    }
    double total = 0.0;
    for (auto& l : logr) total += (l = std::exp(l - maxlog));
    LatentStack out = z;
    out.data.setZero();
    for (std::size_t k = 0; k < K; ++k) {
        out.data -= (logr[k] / total / var[k]) * (z.data - sa * model_.means[k].data);
    }
    return out;
}

double MixtureBackend::log_density(const LatentStack& z, double alpha_bar) const {
    const double d = static_cast<double>(z.data.size());
    const double sa = std::sqrt(alpha_bar);
    double wsum = 0.0;
    for (double w : model_.weights) wsum += w;
    std::vector<double> terms;
    double maxlog = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < model_.means.size(); ++k) {
        const double var = alpha_bar * model_.sigmas[k] * model_.sigmas[k] + (1.0 - alpha_bar);
        const double sq = (z.data - sa * model_.means[k].data).squaredNorm();
        terms.push_back(std::log(model_.weights[k] / wsum) - 0.5 * d * std::log(2.0 * std::numbers::pi * var) -
                        0.5 * sq / var);
        maxlog = std::max(maxlog, terms.back());
    }
    double acc = 0.0;
    for (double l : terms) acc += std::exp(l - maxlog);
    return maxlog + std::log(acc);
}

FeatureSet MixtureBackend::features(const LatentStack& z) const {
    Eigen::MatrixXd mixed = z.data;
    const double lambda = options_.view_mixing;
    if (lambda > 0.0) {
        const Eigen::Index n = z.cells_per_view();
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, z.channels);
        for (int v = 0; v < kNumViews; ++v) mean += z.view(v) / kNumViews;
        for (int v = 0; v < kNumViews; ++v) mixed.middleRows(v * n, n) = (1.0 - lambda) * z.view(v) + lambda * mean;
    }
    FeatureSet out;
    for (int s : options_.feature_strides) {
        FeatureMap layer;
        layer.stride = s * codec_.stride();
        layer.height = z.height / s;
        layer.width = z.width / s;
        layer.data = pool_views(mixed, z.height, z.width, s);
        out.push_back(std::move(layer));
    }
    return out;
}

DenoiserOutput MixtureBackend::predict(const LatentStack& z, int t, const Condition&) const {
    if (!z.same_shape(model_.means[0])) throw ValidationError("latent shape does not match the mixture");
    const double ab = schedule_.alpha_bar(t);
    DenoiserOutput out;
    out.epsilon = score(z, ab);
    out.epsilon.data *= -std::sqrt(1.0 - ab);
    out.epsilon.timestep = t;
    out.features = features(z);
    return out;
}

LatentStack MixtureBackend::feature_vjp(const LatentStack& z, int, const Condition&, const FeatureSet& grad) const {
    if (grad.size() != options_.feature_strides.size()) throw ValidationError("feature gradient has the wrong layer count");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(z.data.rows(), z.data.cols());
    for (std::size_t l = 0; l < grad.size(); ++l) {
        g += unpool_views(grad[l].data, z.height, z.width, options_.feature_strides[l]);
    }
    const double lambda = options_.view_mixing;
    LatentStack out = z;
    out.data = g;
    if (lambda > 0.0) {
        const Eigen::Index n = z.cells_per_view();
        Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, z.channels);
        for (int v = 0; v < kNumViews; ++v) total += g.middleRows(v * n, n);
        for (int v = 0; v < kNumViews; ++v) {
            out.view(v) = (1.0 - lambda) * g.middleRows(v * n, n) + (lambda / kNumViews) * total;
        }
    }
    return out;
}

MixtureBackend analytic_mixture_backend(MixtureModel model, NoiseSchedule schedule, MixtureBackendOptions options) {
    return MixtureBackend(std::move(model), std::move(schedule), std::move(options));
}

MixtureBackend toy_backend(const LatentStack& latents, double sigma, double view_mixing) {
    MixtureModel model;
    model.means.push_back(latents);
    model.weights.push_back(1.0);
    model.sigmas.push_back(sigma);
    MixtureBackendOptions options;
    options.view_mixing = view_mixing;
    return MixtureBackend(std::move(model), NoiseSchedule::scaled_linear(), options);
}

} // namespace mvdrag
