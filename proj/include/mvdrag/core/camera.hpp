#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace mvdrag {

/// Orbit camera looking at the world origin with +y as the up axis.
///
/// Azimuth rotates counter-clockwise about +y seen from above; azimuth 0 sits
/// on the +x axis. Camera space follows the pixel convention: x right, y down,
/// z forward, so visible points have positive depth. Pixel centers sit on
/// integer coordinates and the principal point is (width/2, height/2).
class Camera {
public:
    Camera() : Camera(0.0, 0.0, 2.5, 50.0, 256) {}
    Camera(double azimuth_deg, double elevation_deg, double distance, double fov_y_deg, int resolution);

    double azimuth() const { return azimuth_; }
    double elevation() const { return elevation_; }
    double distance() const { return distance_; }
    double fov_y() const { return fov_y_; }
    int resolution() const { return resolution_; }
    int width() const { return resolution_; }
    int height() const { return resolution_; }

    double focal() const { return focal_; }
    double cx() const { return 0.5 * resolution_; }
    double cy() const { return 0.5 * resolution_; }

    /// World-to-camera rotation; rows are the camera right, down and forward axes.
    const Eigen::Matrix3d& rotation() const { return rotation_; }
    const Eigen::Vector3d& translation() const { return translation_; }
    Eigen::Vector3d center() const { return -rotation_.transpose() * translation_; }

    Eigen::Matrix4d view_matrix() const;
    /// Pinhole intrinsics K mapping camera-space (x, y, z) to homogeneous pixels.
    Eigen::Matrix3d intrinsics() const;

    template <typename Scalar>
    Eigen::Matrix<Scalar, 3, 1> to_camera(const Eigen::Matrix<Scalar, 3, 1>& world) const {
        return rotation_.template cast<Scalar>() * world + translation_.template cast<Scalar>();
    }

    /// Pixel coordinates (u, v) and camera depth z of a world point.
    /// Points with z <= 0 produce meaningless pixels; check depth first.
    template <typename Scalar>
    Eigen::Matrix<Scalar, 3, 1> project(const Eigen::Matrix<Scalar, 3, 1>& world) const {
        const auto p = to_camera(world);
        Eigen::Matrix<Scalar, 3, 1> out;
        out(0) = Scalar(focal_) * p(0) / p(2) + Scalar(cx());
        out(1) = Scalar(focal_) * p(1) / p(2) + Scalar(cy());
        out(2) = p(2);
        return out;
    }

    /// Inverse of project(): the world point at pixel (u, v) with camera depth z.
    Eigen::Vector3d unproject(double u, double v, double z) const;

    /// Same pose and intrinsics with a different azimuth.
    Camera with_azimuth(double azimuth_deg) const;

private:
    double azimuth_;
    double elevation_;
    double distance_;
    double fov_y_;
    int resolution_;
    double focal_;
    Eigen::Matrix3d rotation_;
    Eigen::Vector3d translation_;
};

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Rotation about the +y axis by `deg` degrees, matching the camera azimuth direction.
Eigen::Matrix3d rotation_about_up(double deg);

} // namespace mvdrag
