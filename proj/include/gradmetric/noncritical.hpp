#pragma once

#include <Eigen/Dense>

#include "gradmetric/errors.hpp"

namespace gradmetric {

/// Dual frame with e^1 = y kept exact (not normalised) so the pairing
/// coordinates of y read (1, 0, ..., 0); rows 2..n come from the Householder
/// reflection that maps y/|y| onto a signed first basis co-vector, hence are
/// orthonormal and orthogonal to y.  This is the one site fixing the dual
/// pairing normalisation.
struct DualFrame {
    Eigen::MatrixXd rows;  // row j = e^{j+1}
    int dim() const { return static_cast<int>(rows.rows()); }
};

DualFrame complete_dual_frame(const Eigen::VectorXd& y);

/// Pointwise solution G of G y = x with the certified lower bound
/// G >= (x.y/2) I in frame coordinates.
struct LocalMetricPoint {
    Eigen::MatrixXd G;       // frame coordinates, symmetric
    Eigen::MatrixXd G_std;   // pushed to standard coordinates: E^{-1} G E^{-T}
    double X1 = 0.0;         // pairing <x, y> > 0
};

struct NonCriticalOptions {
    double pairing_tol = 1e-12;  // require <x,y> >= tol * |x| |y|
};

LocalMetricPoint build_noncritical_metric(const Eigen::VectorXd& x_val,
                                          const Eigen::VectorXd& y_val,
                                          const NonCriticalOptions& opts = {});

}  // namespace gradmetric
