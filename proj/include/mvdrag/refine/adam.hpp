#pragma once

#include <Eigen/Core>

#include <cmath>

namespace mvdrag {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First and second moments for one parameter block.
struct AdamMoments {
    Eigen::MatrixXd m;
    Eigen::MatrixXd v;
    long step = 0;

    void reset(Eigen::Index rows, Eigen::Index cols) {
        m = Eigen::MatrixXd::Zero(rows, cols);
        v = Eigen::MatrixXd::Zero(rows, cols);
        step = 0;
    }

    /// Keeps the moments of the listed rows, in order.
    template <typename Indices>
    void gather_rows(const Indices& rows) {
        Eigen::MatrixXd nm(static_cast<Eigen::Index>(rows.size()), m.cols());
        Eigen::MatrixXd nv(static_cast<Eigen::Index>(rows.size()), v.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            nm.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
            nv.row(static_cast<Eigen::Index>(i)) = v.row(rows[i]);
        }
        m = std::move(nm);
        v = std::move(nv);
    }
};

template <typename Param, typename Grad>
void adam_update(Eigen::MatrixBase<Param>& param, const Eigen::MatrixBase<Grad>& grad, AdamMoments& state,
                 const AdamOptions& options) {
    if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) state.reset(param.rows(), param.cols());
    ++state.step;
    state.m = options.beta1 * state.m + (1.0 - options.beta1) * grad;
    state.v = options.beta2 * state.v + (1.0 - options.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
    param -= (options.lr * (state.m / c1).array() / ((state.v / c2).array().sqrt() + options.eps)).matrix();
}

} // namespace mvdrag
