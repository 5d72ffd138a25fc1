#include "mvdrag/core/gaussian_cloud.hpp"

#include "mvdrag/core/errors.hpp"

#include <string>

namespace mvdrag {

void validate(const GaussianCloud& cloud) {
    const Eigen::Index n = cloud.size();
    if (cloud.rotations.rows() != n || cloud.log_scales.rows() != n || cloud.opacity_logits.rows() != n ||
        cloud.sh.rows() != n) {
        throw ValidationError("gaussian cloud fields have inconsistent lengths");
    }
    if (cloud.sh_degree < 0 || cloud.sh_degree > kMaxShDegree ||
        cloud.sh.cols() != 3 * sh_coeff_count(cloud.sh_degree)) {
        throw ValidationError("gaussian cloud SH layout does not match degree " + std::to_string(cloud.sh_degree));
    }
    if (cloud.tagged()) {
        if (static_cast<Eigen::Index>(cloud.view_ids.size()) != n) {
            throw ValidationError("view_id tags do not cover every gaussian");
        }
        for (auto id : cloud.view_ids) {
            if (id < 0 || id > 3) throw DataError("view_id outside {0,1,2,3}");
        }
    }
    if (!cloud.positions.allFinite()) throw DataError("non-finite gaussian position");
    if (!cloud.rotations.allFinite()) throw DataError("non-finite gaussian rotation");
    if (!cloud.log_scales.allFinite()) throw DataError("non-finite gaussian scale");
    if (!cloud.opacity_logits.allFinite()) throw DataError("non-finite gaussian opacity");
    if (!cloud.sh.allFinite()) throw DataError("non-finite gaussian SH coefficient");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (cloud.rotations.row(i).norm() == 0.0) throw DataError("zero-norm quaternion at index " + std::to_string(i));
    }
}

void normalize_rotations(GaussianCloud& cloud) {
    cloud.rotations.rowwise().normalize();
}

void append(GaussianCloud& dst, const GaussianCloud& src) {
    if (src.empty()) return;
    if (dst.empty() && dst.view_ids.empty()) {
        dst = src;
        return;
    }
    if (dst.sh_degree != src.sh_degree) throw ValidationError("cannot append clouds with different SH degrees");
    if (dst.tagged() != src.tagged()) throw ValidationError("cannot append tagged and untagged clouds");
    const Eigen::Index n = dst.size();
    const Eigen::Index m = src.size();
    auto grow = [&](auto& a, const auto& b) {
        a.conservativeResize(n + m, Eigen::NoChange);
        a.bottomRows(m) = b;
    };
    grow(dst.positions, src.positions);
    grow(dst.rotations, src.rotations);
    grow(dst.log_scales, src.log_scales);
    grow(dst.sh, src.sh);
    dst.opacity_logits.conservativeResize(n + m);
    dst.opacity_logits.tail(m) = src.opacity_logits;
    dst.view_ids.insert(dst.view_ids.end(), src.view_ids.begin(), src.view_ids.end());
}

GaussianCloud select(const GaussianCloud& cloud, const std::vector<Eigen::Index>& indices) {
    GaussianCloud out(static_cast<Eigen::Index>(indices.size()), cloud.sh_degree);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto i = indices[k];
        const auto r = static_cast<Eigen::Index>(k);
        out.positions.row(r) = cloud.positions.row(i);
        out.rotations.row(r) = cloud.rotations.row(i);
        out.log_scales.row(r) = cloud.log_scales.row(i);
        out.opacity_logits(r) = cloud.opacity_logits(i);
        out.sh.row(r) = cloud.sh.row(i);
        if (cloud.tagged()) out.view_ids.push_back(cloud.view_ids[static_cast<std::size_t>(i)]);
    }
    return out;
}

Normalization normalize_to_unit_sphere(GaussianCloud& cloud) {
    Normalization norm;
    if (cloud.empty()) return norm;
    norm.center = cloud.positions.colwise().mean().transpose();
    const double radius = (cloud.positions.rowwise() - norm.center.transpose()).rowwise().norm().maxCoeff();
    norm.scale = radius > 0.0 ? 1.0 / radius : 1.0;
    cloud.positions = ((cloud.positions.rowwise() - norm.center.transpose()) * norm.scale).eval();
    cloud.log_scales.array() += std::log(norm.scale);
    return norm;
}

} // namespace mvdrag
