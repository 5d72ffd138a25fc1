#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>

namespace mvdrag {

inline constexpr int fourier_dim(int bands) { return 3 + 6 * bands; }

/// [x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^(L-1) pi x), cos(2^(L-1) pi x)]
/// with each sin/cos block holding the three coordinates.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fourier_embed(const Eigen::Matrix<Scalar, 3, 1>& x, int bands) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(fourier_dim(bands));
    out.template head<3>() = x;
    Scalar freq = Scalar(std::numbers::pi);
    for (int l = 0; l < bands; ++l) {
        for (int c = 0; c < 3; ++c) {
            out(3 + 6 * l + c) = std::sin(freq * x(c));
            out(6 + 6 * l + c) = std::cos(freq * x(c));
        }
        freq *= Scalar(2);
    }
    return out;
}

/// Row-wise embedding of an N x 3 point matrix.
Eigen::MatrixXd fourier_embed_rows(const Eigen::Matrix<double, Eigen::Dynamic, 3>& points, int bands);

} // namespace mvdrag
