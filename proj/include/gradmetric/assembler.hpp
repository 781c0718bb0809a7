#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradmetric/critical.hpp"
#include "gradmetric/jet.hpp"
#include "gradmetric/noncritical.hpp"

namespace gradmetric {

/// Standard compactly supported bump: exp(1 - 1/(1 - r^2)) for
/// r = |x - center| / radius < 1, zero outside.
double bump_weight(const Eigen::VectorXd& center, double radius,
                   const Eigen::VectorXd& x);

/// Plateau weight: 1 inside r_inner, 0 outside r_outer, smooth in between.
double plateau_weight(const Eigen::VectorXd& center, double r_inner, double r_outer,
                      const Eigen::VectorXd& x);

struct Chart {
    enum class Kind { Critical, NonCritical };
    Kind kind = Kind::NonCritical;
    Eigen::VectorXd center;
    double radius = 0.0;
    std::optional<MetricSeries> series;  // Critical charts only
};

/// Normalised convex combination of per-chart local solutions; each value is
/// an upper-index form g^{ab}(x).  NonCritical charts evaluate the pointwise
/// block construction from the fields at x.
class GlobalMetric {
public:
    GlobalMetric(std::vector<Chart> charts, FieldPair fields);

    const std::vector<Chart>& charts() const { return charts_; }
    const FieldPair& fields() const { return fields_; }

    /// g^{ab}(x); throws CoverageGap when no chart weight is positive, and
    /// NonPositivePairing when a covering NonCritical chart sees <X,Y> <= 0.
    Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

    /// Raw bump weights, one per chart.
    Eigen::VectorXd weights(const Eigen::VectorXd& x) const;

    nlohmann::json to_json() const;
    static GlobalMetric from_json(const nlohmann::json& doc);

private:
    std::vector<Chart> charts_;
    FieldPair fields_;
};

/// Verifies coverage of the domain on a sample grid before returning the
/// assembled metric; throws CoverageGap listing uncovered points.
GlobalMetric assemble_global(std::vector<Chart> charts, const FieldPair& fields,
                             int coverage_grid_per_axis = 9);

struct AtlasOptions {
    int series_order = 6;
    int noncritical_per_axis = 5;   // chart grid resolution
    double positivity_cap = 0.9;    // fraction of the positivity radius used
    SeriesOptions series;
};

/// Plan charts for a field pair: one Critical chart per located critical
/// point (radius bounded by the positivity region of its series) and a grid
/// of NonCritical charts whose supports avoid the critical set.
std::vector<Chart> plan_atlas(const FieldPair& fields,
                              const std::vector<Eigen::VectorXd>& critical_points,
                              const AtlasOptions& opts = {});

/// Lower-index background metric field with the critical-point data needed by
/// the extension formula.
struct BackgroundMetric {
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> value;
    std::vector<Eigen::VectorXd> critical_points;
    std::vector<Eigen::MatrixXd> anchors;  // value at each critical point
};

/// Continuous (or C^k, depending on the background) exact solution
///   g~ = g + (R Y^T + Y R^T)/<X,Y> - (R.X) Y Y^T / <X,Y>^2,  R = Y - g X,
/// extended through critical points by its anchor values.
class ExtensionField {
public:
    ExtensionField(BackgroundMetric background, FieldPair fields);

    /// Lower-index g~_{ab}(x).
    Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;
    /// Deficit R_b(x) of the background.
    Eigen::VectorXd deficit(const Eigen::VectorXd& x) const;
    const BackgroundMetric& background() const { return background_; }
    const FieldPair& fields() const { return fields_; }

private:
    double snap_radius_ = 1e-12;
    BackgroundMetric background_;
    FieldPair fields_;
};

ExtensionField continuous_extension(BackgroundMetric background, FieldPair fields);

struct CkOptions {
    SeriesOptions series;
    double plateau_fraction = 0.5;  // inner plateau radius / chart radius
    int positivity_directions = 32;
};

/// Background built from the degree-k truncations of the critical-point
/// series (inverted to the lower-index form), blended with the identity
/// metric through plateau weights that freeze the series near each critical
/// point.  The deficit of this background vanishes to order k+1 at every
/// critical point.
BackgroundMetric build_ck_background(const FieldPair& fields, int k,
                                     const std::vector<Eigen::VectorXd>& critical_points,
                                     const CkOptions& opts = {});

struct DirectionalProbe {
    double limit_axis = 0.0;       // along x2 = 0
    double limit_diagonal = 0.0;   // along x2 = x1
    double difference = 0.0;
    double g11_at_ones = 0.0;      // extension value at (1, 1)
    bool nondifferentiable = false;
};

/// Probes d_1 g~_11 of the radial field X = Y = x in the plane under the
/// sheared background diag(1 + x2, 1) along two rays into the critical point;
/// the two limits differ, certifying that the plain continuous extension is
/// not C^1.
DirectionalProbe counterexample_probe(int refinement_levels = 10,
                                      double step_scale = 1e-3);

struct VerificationReport {
    int grid_per_axis = 0;
    long grid_points = 0;
    double max_residual = 0.0;       // |g Y - X|_inf, absolute
    double max_residual_rel = 0.0;   // relative to max(1, |X|, |g||Y|) per point
    double min_eigenvalue = 0.0;
    std::vector<long> chart_coverage;          // grid points per chart with w > 0
    long pairing_violations = 0;
    std::vector<Eigen::VectorXd> violation_examples;
    long coverage_gaps = 0;
    std::vector<std::vector<double>> smoothness;  // per order: max FD discrepancy
    bool residual_pass = false;
    bool positivity_pass = false;

    nlohmann::json to_json() const;
    std::string to_csv(const GlobalMetric& gm) const;  // sampled entries
};

/// Residual and positivity scan of an assembled metric over a grid, with
/// optional finite-difference smoothness probes up to the given order.
VerificationReport verify_global(const GlobalMetric& gm, const FieldPair& fields,
                                 int grid_per_axis, double residual_tol = 1e-8,
                                 int smoothness_order = 0);

}  // namespace gradmetric
