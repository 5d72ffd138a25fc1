#pragma once

#include <Eigen/Core>

#include <array>

namespace mvdrag {

/// Real spherical-harmonic basis up to degree 3 evaluated at a unit direction,
/// in the coefficient order used by splat PLY files.
template <typename Scalar>
std::array<Scalar, 16> sh_basis(const Eigen::Matrix<Scalar, 3, 1>& dir, int degree) {
    constexpr double C0 = 0.28209479177387814;
    constexpr double C1 = 0.4886025119029199;
    constexpr double C2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                              0.5462742152960396};
    constexpr double C3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                              -0.4570457994644658, 1.445305721320277, -0.5900435899266435};

    std::array<Scalar, 16> y;
    y.fill(Scalar(0));
    y[0] = Scalar(C0);
    if (degree < 1) return y;
    const Scalar x = dir(0), yy_ = dir(1), z = dir(2);
    y[1] = Scalar(-C1) * yy_;
    y[2] = Scalar(C1) * z;
    y[3] = Scalar(-C1) * x;
    if (degree < 2) return y;
    const Scalar xx = x * x, yy = yy_ * yy_, zz = z * z;
    const Scalar xy = x * yy_, yz = yy_ * z, xz = x * z;
    y[4] = Scalar(C2[0]) * xy;
    y[5] = Scalar(C2[1]) * yz;
    y[6] = Scalar(C2[2]) * (Scalar(2) * zz - xx - yy);
    y[7] = Scalar(C2[3]) * xz;
    y[8] = Scalar(C2[4]) * (xx - yy);
    if (degree < 3) return y;
    y[9] = Scalar(C3[0]) * yy_ * (Scalar(3) * xx - yy);
    y[10] = Scalar(C3[1]) * xy * z;
    y[11] = Scalar(C3[2]) * yy_ * (Scalar(4) * zz - xx - yy);
    y[12] = Scalar(C3[3]) * z * (Scalar(2) * zz - Scalar(3) * xx - Scalar(3) * yy);
    y[13] = Scalar(C3[4]) * x * (Scalar(4) * zz - xx - yy);
    y[14] = Scalar(C3[5]) * z * (xx - yy);
    y[15] = Scalar(C3[6]) * x * (xx - Scalar(3) * yy);
    return y;
}

} // namespace mvdrag
