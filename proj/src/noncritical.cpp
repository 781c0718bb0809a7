#include "gradmetric/noncritical.hpp"

#include <cmath>

namespace gradmetric {

namespace {

/// Symmetric orthogonal H with H e_1 = -sign(y_1) y/|y|, plus the scale d0
/// such that the frame matrix factors as E = diag(d0, 1, .., 1) * H.
struct FrameFactors {
    Eigen::MatrixXd H;
    double d0;
};

FrameFactors householder_factors(const Eigen::VectorXd& y) {
    const int n = static_cast<int>(y.size());
    const double ynorm = y.norm();
    FrameFactors out{Eigen::MatrixXd::Identity(n, n), ynorm};
    if (n == 1) {
        out.d0 = y(0);
        return out;
    }
    const double s = y(0) >= 0.0 ? 1.0 : -1.0;
    Eigen::VectorXd v = y;
    v(0) += s * ynorm;
    out.H -= (2.0 / v.squaredNorm()) * (v * v.transpose());
    out.d0 = -s * ynorm;
    return out;
}

}  // namespace

DualFrame complete_dual_frame(const Eigen::VectorXd& y) {
    if (y.norm() == 0.0) throw ZeroCovector("complete_dual_frame: zero co-vector");
    const FrameFactors f = householder_factors(y);
    DualFrame frame{f.H};
    frame.rows.row(0) = y.transpose();  // e^1 = y exactly; d0 * H row 0 = y up to round-off
    return frame;
}

LocalMetricPoint build_noncritical_metric(const Eigen::VectorXd& x_val,
                                          const Eigen::VectorXd& y_val,
                                          const NonCriticalOptions& opts) {
    const int n = static_cast<int>(x_val.size());
    if (y_val.size() != n)
        throw Error("build_noncritical_metric: dimension mismatch");
    if (y_val.norm() == 0.0)
        throw ZeroCovector("build_noncritical_metric: zero co-vector");
    const double pairing = x_val.dot(y_val);
    if (pairing <= opts.pairing_tol * x_val.norm() * y_val.norm() || pairing <= 0.0)
        throw NonPositivePairing("build_noncritical_metric: <X,Y> = " +
                                 std::to_string(pairing) + " is not positive");

    const FrameFactors f = householder_factors(y_val);
    // frame coordinates X^j = <x, e^j>; e^1 = y, e^j = row j of H
    Eigen::VectorXd coords = f.H * x_val;
    coords(0) = pairing;

    LocalMetricPoint out;
    out.X1 = pairing;
    out.G = Eigen::MatrixXd::Zero(n, n);
    out.G(0, 0) = out.X1;
    if (n > 1) {
        const Eigen::VectorXd xbar = coords.tail(n - 1);
        const double fdiag = 0.5 * out.X1 + 2.0 * xbar.squaredNorm() / out.X1;
        out.G.col(0).tail(n - 1) = xbar;
        out.G.row(0).tail(n - 1) = xbar.transpose();
        out.G.bottomRightCorner(n - 1, n - 1) =
            fdiag * Eigen::MatrixXd::Identity(n - 1, n - 1);
    }
    // push to standard coordinates: E = D H with D = diag(d0, 1..1), so
    // E^{-1} G E^{-T} = H (D^{-1} G D^{-1}) H and the only scaling touches the
    // first row/column exactly
    Eigen::MatrixXd scaled = out.G;
    scaled.row(0) /= f.d0;
    scaled.col(0) /= f.d0;
    out.G_std = f.H * scaled * f.H;
    out.G_std = 0.5 * (out.G_std + out.G_std.transpose()).eval();
    return out;
}

}  // namespace gradmetric
