#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <vector>

namespace mvdrag {

/// Number of SH coefficients per color channel for a given degree.
constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

constexpr int kMaxShDegree = 3;

/// Zeroth-order SH basis constant; DC coefficient c maps to color 0.5 + kShC0 * c.
constexpr double kShC0 = 0.28209479177387814;

/// Structure-of-arrays Gaussian splat storage.
///
/// Parameters are held in their optimization spaces:
///   - log_scales:     log of per-axis extents
///   - opacity_logits: pre-sigmoid opacity
///   - rotations:      raw quaternions (w, x, y, z), normalized on activation
///   - sh:             N x 3K, column k * 3 + c is coefficient k of channel c
///
/// view_ids is either empty (untagged cloud) or holds one entry in {0,1,2,3}
/// per Gaussian.
template <typename Scalar>
struct GaussianCloudT {
    using Positions = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
    using Quaternions = Eigen::Matrix<Scalar, Eigen::Dynamic, 4>;
    using Column = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Coefficients = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Positions positions;
    Quaternions rotations;
    Positions log_scales;
    Column opacity_logits;
    Coefficients sh;
    int sh_degree = 0;
    std::vector<std::int8_t> view_ids;

    GaussianCloudT() { resize(0, 0); }

    explicit GaussianCloudT(Eigen::Index n, int degree = 0) { resize(n, degree); }

    Eigen::Index size() const { return positions.rows(); }
    bool empty() const { return size() == 0; }
    bool tagged() const { return !view_ids.empty(); }
    int coeffs_per_channel() const { return sh_coeff_count(sh_degree); }

    /// Reallocates all fields; contents are identity-initialized.
    void resize(Eigen::Index n, int degree) {
        sh_degree = degree;
        positions.setZero(n, 3);
        rotations.setZero(n, 4);
        rotations.col(0).setOnes();
        log_scales.setZero(n, 3);
        opacity_logits.setZero(n);
        sh.setZero(n, 3 * sh_coeff_count(degree));
        view_ids.clear();
    }

    Eigen::Matrix<Scalar, 3, 1> scale(Eigen::Index i) const {
        return log_scales.row(i).transpose().array().exp().matrix();
    }

    Scalar opacity(Eigen::Index i) const {
        using std::exp;
        return Scalar(1) / (Scalar(1) + exp(-opacity_logits(i)));
    }

    Eigen::Quaternion<Scalar> rotation(Eigen::Index i) const {
        Eigen::Quaternion<Scalar> q(rotations(i, 0), rotations(i, 1), rotations(i, 2), rotations(i, 3));
        return q.normalized();
    }

    /// Color produced by the DC term alone (view-independent part).
    Eigen::Matrix<Scalar, 3, 1> base_color(Eigen::Index i) const {
        return (sh.row(i).template head<3>().transpose() * Scalar(kShC0)).array() + Scalar(0.5);
    }

    void set_base_color(Eigen::Index i, const Eigen::Matrix<Scalar, 3, 1>& rgb) {
        sh.row(i).template head<3>() = ((rgb.array() - Scalar(0.5)) / Scalar(kShC0)).matrix().transpose();
    }

    template <typename Other>
    GaussianCloudT<Other> cast() const {
        GaussianCloudT<Other> out;
        out.positions = positions.template cast<Other>();
        out.rotations = rotations.template cast<Other>();
        out.log_scales = log_scales.template cast<Other>();
        out.opacity_logits = opacity_logits.template cast<Other>();
        out.sh = sh.template cast<Other>();
        out.sh_degree = sh_degree;
        out.view_ids = view_ids;
        return out;
    }
};

using GaussianCloud = GaussianCloudT<double>;

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Throws DataError if any field is non-finite or the layout is inconsistent.
void validate(const GaussianCloud& cloud);

/// Rescales every stored quaternion to unit norm.
void normalize_rotations(GaussianCloud& cloud);

/// Appends `src` to `dst`. Both must share an SH degree and tagging state.
void append(GaussianCloud& dst, const GaussianCloud& src);

/// Subset of Gaussians by index, in the order given.
GaussianCloud select(const GaussianCloud& cloud, const std::vector<Eigen::Index>& indices);

/// Similarity transform x -> scale * (x - center).
struct Normalization {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double scale = 1.0;

    Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return scale * (x - center); }
};

/// Centers positions on their centroid and scales them into the unit ball.
/// Log-scales are shifted so the splats keep their relative size.
Normalization normalize_to_unit_sphere(GaussianCloud& cloud);

} // namespace mvdrag
