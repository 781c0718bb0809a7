#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "gradmetric/errors.hpp"
#include "gradmetric/multi_index.hpp"

namespace gradmetric {

/// Truncated multivariate Taylor expansion around a base point.  A stored
/// coefficient is the coefficient of (x - base)^m, i.e. the m-th partial
/// derivative at the base divided by m!.  Coefficient iteration, evaluation
/// and products all follow the canonical graded-lexicographic order, which
/// makes every result bit-reproducible.
class Jet {
public:
    using CoeffMap = std::map<MultiIndex, double, GradedLexLess>;

    Jet(int dim, int order, Eigen::VectorXd base);

    int dim() const { return dim_; }
    int order() const { return order_; }
    const Eigen::VectorXd& base_point() const { return base_; }
    const CoeffMap& coeffs() const { return coeffs_; }

    /// Stored coefficient, zero when absent.
    double coeff(const MultiIndex& m) const;

    /// Set (overwrite) a coefficient; degree must not exceed the order.
    void set_coeff(const MultiIndex& m, double value);

    /// Add into a coefficient.
    void add_coeff(const MultiIndex& m, double value);

    double eval(const Eigen::VectorXd& x) const;

    /// m! * coeff[m]; throws OrderExceeded when |m| > order.
    double derivative_at_base(const MultiIndex& m) const;

    /// Cauchy product truncated at min(order, other.order).
    Jet multiply(const Jet& other) const;

    Jet add(const Jet& other) const;
    Jet scaled(double factor) const;

    /// Formal partial derivative along one axis (order drops by one).
    Jet axis_derivative(int axis) const;

    /// Exact polynomial re-expansion around a new base point.
    Jet recentered(const Eigen::VectorXd& new_base) const;

private:
    int dim_, order_;
    Eigen::VectorXd base_;
    CoeffMap coeffs_;
};

/// Axis-aligned box domain.
struct Box {
    Eigen::VectorXd min;
    Eigen::VectorXd max;
    bool contains(const Eigen::VectorXd& x, double margin = 0.0) const;
    Eigen::VectorXd center() const { return 0.5 * (min + max); }
};

/// Vector field X^a and co-vector field Y_b as component jets sharing the
/// base point and order.
struct FieldPair {
    int dim = 0;
    std::vector<Jet> X;
    std::vector<Jet> Y;
    Box domain;

    Eigen::VectorXd eval_X(const Eigen::VectorXd& x) const;
    Eigen::VectorXd eval_Y(const Eigen::VectorXd& x) const;
    /// Jacobian J(c,b) = d_c Y_b at x.
    Eigen::MatrixXd jacobian_Y(const Eigen::VectorXd& x) const;
    /// Re-expand every component jet around a new base point.
    FieldPair recentered(const Eigen::VectorXd& new_base) const;
    int order() const { return X.empty() ? 0 : X.front().order(); }
};

struct CriticalPointSearch {
    std::vector<Eigen::VectorXd> points;
    /// Candidates abandoned because the Newton Jacobian was singular nearby.
    std::vector<Eigen::VectorXd> degenerate_candidates;
};

/// Zeros of Y inside the domain, Newton-refined from a uniform grid of seeds
/// and deduplicated within 10*tol.
CriticalPointSearch locate_critical_points(const FieldPair& fp, double tol = 1e-10,
                                           int seeds_per_axis = 9);

}  // namespace gradmetric
