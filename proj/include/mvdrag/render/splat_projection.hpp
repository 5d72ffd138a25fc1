#pragma once

#include "mvdrag/core/camera.hpp"
#include "mvdrag/core/gaussian_cloud.hpp"
#include "mvdrag/render/sh.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>

namespace mvdrag {

struct RenderSettings {
    /// Gray level composited behind the splats.
    double background = 0.5;
    /// A splat touches pixels within this many standard deviations of its
    /// projected center; the same radius decides image-level culling.
    double cutoff_sigma = 3.0;
    double near_plane = 0.01;
    /// Isotropic screen-space variance (px^2) added to every footprint.
    double low_pass = 0.3;
};

/// Screen-space footprint of one splat.
template <typename Scalar>
struct ProjectedSplat {
    Eigen::Matrix<Scalar, 2, 1> mean;
    /// Inverse 2-D covariance as (a, b, c) of [[a, b], [b, c]].
    Eigen::Matrix<Scalar, 3, 1> conic;
    /// 2-D covariance as (xx, xy, yy).
    Eigen::Matrix<Scalar, 3, 1> cov;
    Eigen::Matrix<Scalar, 3, 1> color;
    Scalar depth;
    std::array<bool, 3> color_clamped{false, false, false};
};

/// EWA projection of a splat given its raw parameters. Returns false when the
/// center lies in front of the near plane.
template <typename Scalar>
bool project_splat(const Eigen::Matrix<Scalar, 3, 1>& position, const Eigen::Matrix<Scalar, 3, 1>& log_scale,
                   const Eigen::Matrix<Scalar, 4, 1>& quat, const Eigen::Ref<const Eigen::RowVectorXd>& sh, int sh_degree,
                   const Camera& camera, const RenderSettings& settings, ProjectedSplat<Scalar>& out) {
    using std::exp;
    using std::sqrt;
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

    const Vec3 p = camera.to_camera(position);
    if (!(p(2) > Scalar(settings.near_plane))) return false;

    const Scalar qn = sqrt(quat.squaredNorm());
    const Scalar w = quat(0) / qn, x = quat(1) / qn, y = quat(2) / qn, z = quat(3) / qn;
    Mat3 rot;
    rot << Scalar(1) - Scalar(2) * (y * y + z * z), Scalar(2) * (x * y - w * z), Scalar(2) * (x * z + w * y),
           Scalar(2) * (x * y + w * z), Scalar(1) - Scalar(2) * (x * x + z * z), Scalar(2) * (y * z - w * x),
           Scalar(2) * (x * z - w * y), Scalar(2) * (y * z + w * x), Scalar(1) - Scalar(2) * (x * x + y * y);
    Mat3 scaled = rot;
    for (int k = 0; k < 3; ++k) scaled.col(k) *= exp(log_scale(k));
    const Mat3 world_cov = scaled * scaled.transpose();

    const Scalar f(camera.focal());
    const Scalar iz = Scalar(1) / p(2);
    Eigen::Matrix<Scalar, 2, 3> jac;
    jac << f * iz, Scalar(0), -f * p(0) * iz * iz,
           Scalar(0), f * iz, -f * p(1) * iz * iz;
    const Eigen::Matrix<Scalar, 2, 3> t = jac * camera.rotation().template cast<Scalar>();
    const Eigen::Matrix<Scalar, 2, 2> cov2 = t * world_cov * t.transpose();

    out.cov << cov2(0, 0) + Scalar(settings.low_pass), cov2(0, 1), cov2(1, 1) + Scalar(settings.low_pass);
    const Scalar det = out.cov(0) * out.cov(2) - out.cov(1) * out.cov(1);
    out.conic << out.cov(2) / det, -out.cov(1) / det, out.cov(0) / det;
    out.mean << f * p(0) * iz + Scalar(camera.cx()), f * p(1) * iz + Scalar(camera.cy());
    out.depth = p(2);

    const Vec3 dir = (position - camera.center().template cast<Scalar>()) /
                     sqrt((position - camera.center().template cast<Scalar>()).squaredNorm());
    const auto basis = sh_basis(dir, sh_degree);
    const int k = sh_coeff_count(sh_degree);
    for (int c = 0; c < 3; ++c) {
        Scalar v(0.5);
        for (int j = 0; j < k; ++j) v += Scalar(sh(j * 3 + c)) * basis[static_cast<std::size_t>(j)];
        out.color_clamped[static_cast<std::size_t>(c)] = v < Scalar(0);
        out.color(c) = out.color_clamped[static_cast<std::size_t>(c)] ? Scalar(0) : v;
    }
    return true;
}

} // namespace mvdrag
