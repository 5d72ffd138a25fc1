#include "mvdrag/refine/deformation.hpp"

#include "mvdrag/core/errors.hpp"
#include "mvdrag/refine/fourier.hpp"

#include <random>

namespace mvdrag {

DeformationNet::DeformationNet(int bands, int hidden, std::uint64_t seed) : bands_(bands) {
    if (bands < 0 || hidden < 1) throw ValidationError("deformation net needs bands >= 0 and a hidden layer");
    const int in = fourier_dim(bands);
    std::mt19937_64 rng(seed);
    const double bound = std::sqrt(6.0 / in);
    std::uniform_real_distribution<double> uni(-bound, bound);
    w1_.resize(hidden, in);
    for (Eigen::Index i = 0; i < w1_.size(); ++i) w1_(i) = uni(rng);
    b1_ = Eigen::VectorXd::Zero(hidden);
    w2_ = Eigen::MatrixXd::Zero(3, hidden);
    b2_ = Eigen::VectorXd::Zero(3);
}

Eigen::Matrix<double, Eigen::Dynamic, 3> DeformationNet::displacement(
    const Eigen::Matrix<double, Eigen::Dynamic, 3>& points) const {
    const Eigen::MatrixXd pe = fourier_embed_rows(points, bands_);
    const Eigen::MatrixXd h = ((pe * w1_.transpose()).rowwise() + b1_.transpose()).cwiseMax(0.0);
    return (h * w2_.transpose()).rowwise() + b2_.transpose();
}

DeformationGradient DeformationNet::backward(const Eigen::Matrix<double, Eigen::Dynamic, 3>& points,
                                             const Eigen::Matrix<double, Eigen::Dynamic, 3>& grad_displacement) const {
    const Eigen::MatrixXd pe = fourier_embed_rows(points, bands_);
    const Eigen::MatrixXd pre = (pe * w1_.transpose()).rowwise() + b1_.transpose();
    const Eigen::MatrixXd h = pre.cwiseMax(0.0);
    DeformationGradient g;
    g.w2 = grad_displacement.transpose() * h;
    g.b2 = grad_displacement.colwise().sum().transpose();
    const Eigen::MatrixXd dh = ((grad_displacement * w2_).array() * (pre.array() > 0.0).cast<double>()).matrix();
    g.w1 = dh.transpose() * pe;
    g.b1 = dh.colwise().sum().transpose();
    return g;
}

void DeformationNet::adam_step(const DeformationGradient& grad, const AdamOptions& options) {
    adam_update(w1_, grad.w1, mw1_, options);
    adam_update(b1_, grad.b1, mb1_, options);
    adam_update(w2_, grad.w2, mw2_, options);
    adam_update(b2_, grad.b2, mb2_, options);
}

} // namespace mvdrag
