#include "mvdrag/core/camera.hpp"

#include "mvdrag/core/errors.hpp"

namespace mvdrag {

namespace {

double wrap_azimuth(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a < 0.0) a += 360.0;
    if (a >= 360.0) a = 0.0;
    return a;
}

} // namespace

Eigen::Matrix3d rotation_about_up(double deg) {
    const double a = deg2rad(deg);
    Eigen::Matrix3d r;
    r << std::cos(a), 0.0, std::sin(a),
         0.0, 1.0, 0.0,
         -std::sin(a), 0.0, std::cos(a);
    return r;
}

Camera::Camera(double azimuth_deg, double elevation_deg, double distance, double fov_y_deg, int resolution)
    : azimuth_(wrap_azimuth(azimuth_deg)), elevation_(elevation_deg), distance_(distance), fov_y_(fov_y_deg),
      resolution_(resolution) {
    if (resolution <= 0) throw ValidationError("camera resolution must be positive");
    if (!(distance > 0.0)) throw ValidationError("camera distance must be positive");
    if (!(fov_y_deg > 0.0 && fov_y_deg < 180.0)) throw ValidationError("camera fov_y must lie in (0, 180)");
    if (!(std::abs(elevation_deg) < 90.0)) throw ValidationError("camera elevation must lie in (-90, 90)");

    focal_ = 0.5 * resolution_ / std::tan(0.5 * deg2rad(fov_y_));

    const double el = deg2rad(elevation_);
    const Eigen::Vector3d eye =
        rotation_about_up(azimuth_) * Eigen::Vector3d(distance_ * std::cos(el), distance_ * std::sin(el), 0.0);
    const Eigen::Vector3d forward = (-eye).normalized();
    const Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitY()).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    rotation_.row(0) = right.transpose();
    rotation_.row(1) = down.transpose();
    rotation_.row(2) = forward.transpose();
    translation_ = -rotation_ * eye;
}

Eigen::Matrix4d Camera::view_matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

Eigen::Matrix3d Camera::intrinsics() const {
    Eigen::Matrix3d k;
    k << focal_, 0.0, cx(),
         0.0, focal_, cy(),
         0.0, 0.0, 1.0;
    return k;
}

Eigen::Vector3d Camera::unproject(double u, double v, double z) const {
    const Eigen::Vector3d cam((u - cx()) * z / focal_, (v - cy()) * z / focal_, z);
    return rotation_.transpose() * (cam - translation_);
}

Camera Camera::with_azimuth(double azimuth_deg) const {
    return Camera(azimuth_deg, elevation_, distance_, fov_y_, resolution_);
}

} // namespace mvdrag
