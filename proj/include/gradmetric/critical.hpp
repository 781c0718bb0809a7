#pragma once

#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "gradmetric/jet.hpp"
#include "gradmetric/tensor_equations.hpp"

namespace gradmetric {

/// Outcome of the base-metric solve at a critical point.  exists == false is
/// a certificate that the compatibility condition fails there, not an error.
struct BaseMetricResult {
    bool exists = false;
    Eigen::MatrixXd g_bar;      // symmetric positive definite when exists
    double asym_defect = 0.0;   // |G - G^T|_sup for G = U^{-1} A
    double min_eigenvalue = 0.0;
};

/// Thrown by the series construction when the base metric does not exist;
/// carries the certificate.
struct ConditionThreeViolated : Error {
    explicit ConditionThreeViolated(BaseMetricResult cert)
        : Error("base metric does not exist: asym defect " +
                std::to_string(cert.asym_defect) + ", min eigenvalue " +
                std::to_string(cert.min_eigenvalue)),
          certificate(std::move(cert)) {}
    BaseMetricResult certificate;
};

struct GrowthFit {
    enum class Flag { NotFitted, Geometric, ExactPolynomial, NonGeometric };
    double C = 0.0;      // certified constant: t_N <= C * N! * p^N on the fit range
    double p = 0.0;
    double rms = 0.0;    // rms deviation of log(t_N/N!) from the fit line
    Flag flag = Flag::NotFitted;
};

std::string to_string(GrowthFit::Flag flag);

/// Derivative tensors T^{ab}_{c_1..c_N} of the inverse-metric power series
/// around a critical point, for N = 0..order.
struct MetricSeries {
    int dim = 0;
    Eigen::VectorXd base;
    int order = 0;
    std::vector<MultiTensor> coeffs;  // coeffs[N]: two-up, N-down, fully symmetric
    GrowthFit growth;

    nlohmann::json to_json() const;
    static MetricSeries from_json(const nlohmann::json& doc);
};

/// Solve A = U G for the base scalar product.  Rows of A and U carry the
/// differentiation index: A(c,a) = d_c X^a and U(c,b) = d_c Y_b, so the
/// compatibility condition d_c X^a = g^{ab} d_c Y_b reads A = U * G and
/// G = U^{-1} A.  This is the one place the matrix orientation is fixed.
BaseMetricResult solve_base_metric(const Bilinear& a, const Bilinear& u,
                                   double asym_tol = 1e-8, double eig_tol = 1e-10);

/// Right-hand side of the order-N hierarchy equation at the base point:
///   R^a_{c_1..c_N} = d_{c_1}..d_{c_N} X^a
///                    - sum_{S subset [N], |S| < N-1} T^{ab}_{c_S} d_{c_[N]\S} Y_b
/// `series_so_far` holds the tensors of orders 0..N-2.  The result is exactly
/// symmetric in its lower indices (computed per sorted tuple, broadcast).
MultiTensor build_rhs_tensor(int order, const FieldPair& fp,
                             std::span<const MultiTensor> series_so_far);

struct SeriesOptions {
    double criticality_tol = 1e-10;
    double asym_tol = 1e-8;
    double eig_tol = 1e-10;
    double cond_bound = 1e12;
};

/// Iterative construction of the series coefficients at the field pair's base
/// point (which must be a critical point of both fields).  Throws NotCritical,
/// ConditionThreeViolated, DegenerateForm, or OrderExceeded (jets shorter than
/// order+1).
MetricSeries build_metric_series(const FieldPair& fp, int order,
                                 const SeriesOptions& opts = {});

/// Fit log(t_N / N!) ~ log C + N log p over N = 1..order, t_N the coefficient
/// sup-norms.  The reported C is inflated so the bound holds at every fitted
/// point.
GrowthFit fit_growth(const MetricSeries& ms, double rms_bound = 1.5);

/// Truncated power-series evaluation g^{ab}(x); summation follows the
/// canonical multi-index order.  When the growth fit provides p > 0 and
/// |x - base|_1 >= 1/(p n), *outside_radius is set.
Eigen::MatrixXd eval_metric_series(const MetricSeries& ms, const Eigen::VectorXd& x,
                                   bool* outside_radius = nullptr);

/// 1/(p*n) from the fitted growth; +inf when no geometric fit is available.
double convergence_radius(const MetricSeries& ms);

/// Max |coefficient| of the component jets of g^{ab} Y_b - X^a over all total
/// degrees <= upto.  Exercises coefficients up to order upto-1 and, at degree
/// upto, the tensors up to order upto-1; call with upto = order+1 to exercise
/// the full series (requires jets of order >= upto).
double verify_order(const MetricSeries& ms, const FieldPair& fp, int upto);

/// Largest radius r <= r_max such that g stays positive definite on sampled
/// rays out to r (bisection per direction, minimum over directions).
double check_positivity_region(const MetricSeries& ms, int directions = 64,
                               double r_max = 1.0, unsigned seed = 0,
                               int steps = 64);

}  // namespace gradmetric
