#include "mvdrag/refine/fourier.hpp"

namespace mvdrag {

Eigen::MatrixXd fourier_embed_rows(const Eigen::Matrix<double, Eigen::Dynamic, 3>& points, int bands) {
    Eigen::MatrixXd out(points.rows(), fourier_dim(bands));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        out.row(i) = fourier_embed<double>(points.row(i).transpose(), bands).transpose();
    }
    return out;
}

} // namespace mvdrag
