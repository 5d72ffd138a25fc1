#pragma once

#include "mvdrag/refine/adam.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace mvdrag {

struct DeformationGradient {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
};

/// Residual displacement field x' = x + W2 relu(W1 pe(x) + b1) + b2.
/// W2 and b2 start at zero, so a fresh net is the identity.
class DeformationNet {
public:
    DeformationNet(int bands = 6, int hidden = 64, std::uint64_t seed = 0);

    int bands() const { return bands_; }
    int hidden() const { return static_cast<int>(b1_.size()); }

    /// Displacements for N x 3 points.
    Eigen::Matrix<double, Eigen::Dynamic, 3> displacement(const Eigen::Matrix<double, Eigen::Dynamic, 3>& points) const;

    /// Parameter gradient given dL/d(displacement) at `points`.
    DeformationGradient backward(const Eigen::Matrix<double, Eigen::Dynamic, 3>& points,
                                 const Eigen::Matrix<double, Eigen::Dynamic, 3>& grad_displacement) const;

    void adam_step(const DeformationGradient& grad, const AdamOptions& options);

private:
    int bands_;
    Eigen::MatrixXd w1_;
    Eigen::VectorXd b1_;
    Eigen::MatrixXd w2_;
    Eigen::VectorXd b2_;
    AdamMoments mw1_, mb1_, mw2_, mb2_;
};

} // namespace mvdrag
