#include "mvdrag/refine/densify.hpp"

#include "mvdrag/core/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mvdrag {

namespace {

/// Child scale along the split axis relative to the parent.
constexpr double kSplitShrink = 1.0 / 1.6;

} // namespace

void GradientStats::add(const Eigen::Matrix<double, Eigen::Dynamic, 2>& means2d, const std::vector<bool>& visible) {
    if (accum.size() != means2d.rows()) reset(means2d.rows());
    for (Eigen::Index i = 0; i < means2d.rows(); ++i) {
        if (!visible[static_cast<std::size_t>(i)]) continue;
        accum(i) += means2d.row(i).norm();
        count(i) += 1.0;
    }
}

Eigen::VectorXd GradientStats::mean() const {
    return (accum.array() / count.array().max(1.0)).matrix();
}

DensifyResult densify_prune(const GaussianCloud& cloud, const Eigen::VectorXd& mean_grad, const DensifyOptions& options) {
    validate(cloud);
    if (mean_grad.size() != cloud.size()) throw ValidationError("gradient statistics do not match the cloud");
    const Eigen::Index n = cloud.size();

    std::vector<Eigen::Index> candidates;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (mean_grad(i) > options.grad_threshold) candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return mean_grad(a) > mean_grad(b); });
    if (options.max_gaussians > 0) {
        const Eigen::Index room = std::max<Eigen::Index>(0, options.max_gaussians - n);
        if (static_cast<Eigen::Index>(candidates.size()) > room) candidates.resize(static_cast<std::size_t>(room));
    }
    std::vector<int> action(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i : candidates) action[static_cast<std::size_t>(i)] = cloud.scale(i).maxCoeff() > options.split_scale ? 2 : 1;

    DensifyResult out;
    std::vector<Eigen::Index> rows;
    std::vector<Eigen::Vector3d> shifts;
    std::vector<int> split_axis;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int a = action[static_cast<std::size_t>(i)];
        if (a == 2) {
            Eigen::Index axis = 0;
            const Eigen::Vector3d s = cloud.scale(i);
            s.maxCoeff(&axis);
            const Eigen::Vector3d dir = cloud.rotation(i).toRotationMatrix().col(axis);
            const double d = s(axis) * std::sqrt(1.0 - kSplitShrink * kSplitShrink);
            for (double sign : {-1.0, 1.0}) {
                rows.push_back(i);
                shifts.push_back(sign * d * dir);
                split_axis.push_back(static_cast<int>(axis));
            }
            ++out.split;
        } else {
            rows.push_back(i);
            shifts.push_back(Eigen::Vector3d::Zero());
            split_axis.push_back(-1);
            if (a == 1) {
                rows.push_back(i);
                shifts.push_back(Eigen::Vector3d::Zero());
                split_axis.push_back(-1);
                ++out.cloned;
            }
        }
    }

    GaussianCloud grown = select(cloud, rows);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (split_axis[r] < 0) continue;
        const auto row = static_cast<Eigen::Index>(r);
        const Eigen::Index i = rows[r];
        grown.positions.row(row) += shifts[r].transpose();
        grown.log_scales(row, split_axis[r]) += std::log(kSplitShrink);
        grown.opacity_logits(row) = logit(std::min(cloud.opacity(i) * 0.5 / kSplitShrink, 0.999));
    }

    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < grown.size(); ++r) {
        if (grown.opacity(r) >= options.prune_opacity) keep.push_back(r);
    }
    out.pruned = grown.size() - static_cast<Eigen::Index>(keep.size());
    out.cloud = select(grown, keep);
    for (Eigen::Index r : keep) out.source.push_back(rows[static_cast<std::size_t>(r)]);
    return out;
}

} // namespace mvdrag
