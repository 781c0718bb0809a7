#include "gradmetric/assembler.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "gradmetric/field_spec.hpp"

namespace gradmetric {

double bump_weight(const Eigen::VectorXd& center, double radius,
                   const Eigen::VectorXd& x) {
    const double r = (x - center).norm() / radius;
    if (r >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

namespace {
double smooth_step_piece(double t) {  // 0 for t <= 0, positive otherwise
    return t <= 0.0 ? 0.0 : std::exp(-1.0 / t);
}
}  // namespace

double plateau_weight(const Eigen::VectorXd& center, double r_inner, double r_outer,
                      const Eigen::VectorXd& x) {
    const double r = (x - center).norm();
    if (r <= r_inner) return 1.0;
    if (r >= r_outer) return 0.0;
    const double t = (r_outer - r) / (r_outer - r_inner);
    const double a = smooth_step_piece(t);
    const double b = smooth_step_piece(1.0 - t);
    return a / (a + b);
}

GlobalMetric::GlobalMetric(std::vector<Chart> charts, FieldPair fields)
    : charts_(std::move(charts)), fields_(std::move(fields)) {
    for (const auto& c : charts_) {
        if (c.radius <= 0.0) throw Error("GlobalMetric: chart radius must be positive");
        if (c.kind == Chart::Kind::Critical && !c.series)
            throw Error("GlobalMetric: critical chart without a series");
    }
}

Eigen::VectorXd GlobalMetric::weights(const Eigen::VectorXd& x) const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(charts_.size()));
    for (std::size_t k = 0; k < charts_.size(); ++k)
        w(static_cast<Eigen::Index>(k)) = bump_weight(charts_[k].center, charts_[k].radius, x);
    return w;
}

Eigen::MatrixXd GlobalMetric::evaluate(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd w = weights(x);
    const double total = w.sum();
    if (!(total > 0.0)) {
        std::ostringstream os;
        os << "GlobalMetric: no chart covers the point (";
        for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
        os << ")";
        throw CoverageGap(os.str());
    }
    const int n = fields_.dim;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < charts_.size(); ++k) {
        const double wk = w(static_cast<Eigen::Index>(k));
        if (wk == 0.0) continue;
        const Chart& c = charts_[k];
        if (c.kind == Chart::Kind::Critical) {
            g += wk * eval_metric_series(*c.series, x);
        } else {
            const auto local =
                build_noncritical_metric(fields_.eval_X(x), fields_.eval_Y(x));
            g += wk * local.G_std;
        }
    }
    return g / total;
}

GlobalMetric assemble_global(std::vector<Chart> charts, const FieldPair& fields,
                             int coverage_grid_per_axis) {
    GlobalMetric gm(std::move(charts), fields);
    const int n = fields.dim;
    const Eigen::VectorXd extent = fields.domain.max - fields.domain.min;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= coverage_grid_per_axis;
    std::vector<Eigen::VectorXd> gaps;
    for (long s = 0; s < total; ++s) {
        long rem = s;
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) {
            const int gi = static_cast<int>(rem % coverage_grid_per_axis);
            rem /= coverage_grid_per_axis;
            x(i) = fields.domain.min(i) +
                   (gi + 0.5) / coverage_grid_per_axis * extent(i);
        }
        if (!(gm.weights(x).sum() > 0.0)) gaps.push_back(x);
    }
    if (!gaps.empty()) {
        std::ostringstream os;
        os << "assemble_global: " << gaps.size() << " uncovered sample points, first (";
        for (int i = 0; i < gaps.front().size(); ++i)
            os << (i ? ", " : "") << gaps.front()(i);
        os << ")";
        throw CoverageGap(os.str());
    }
    return gm;
}

std::vector<Chart> plan_atlas(const FieldPair& fields,
                              const std::vector<Eigen::VectorXd>& critical_points,
                              const AtlasOptions& opts) {
    const int n = fields.dim;
    const Eigen::VectorXd extent = fields.domain.max - fields.domain.min;
    const Eigen::VectorXd mid = fields.domain.center();
    const double circumradius = 0.5 * extent.norm();

    std::vector<Chart> charts;
    std::vector<double> crit_radius;
    for (const auto& cp : critical_points) {
        const FieldPair local = fields.recentered(cp);
        MetricSeries series = build_metric_series(local, opts.series_order, opts.series);
        double rmax = circumradius + (cp - mid).norm();
        for (const auto& other : critical_points)
            if (&other != &cp && (other - cp).norm() > 0)
                rmax = std::min(rmax, 0.45 * (other - cp).norm());
        const double rpos =
            check_positivity_region(series, 32, rmax, /*seed=*/0);
        const double radius = std::max(opts.positivity_cap * rpos, 1e-12);
        crit_radius.push_back(radius);
        charts.push_back(Chart{Chart::Kind::Critical, cp, radius, std::move(series)});
    }

    // grid of pointwise charts covering the rest of the domain; supports must
    // stay clear of the critical set, with the hole left to the critical chart
    const int g = std::max(opts.noncritical_per_axis, 2);
    const double spacing = extent.maxCoeff() / g;
    const double nc_radius = spacing * std::sqrt(double(n)) * 1.25;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= g;
    for (long s = 0; s < total; ++s) {
        long rem = s;
        Eigen::VectorXd c(n);
        for (int i = 0; i < n; ++i) {
            const int gi = static_cast<int>(rem % g);
            rem /= g;
            c(i) = fields.domain.min(i) + (gi + 0.5) / g * extent(i);
        }
        bool clear = true;
        for (std::size_t k = 0; k < critical_points.size(); ++k)
            if ((c - critical_points[k]).norm() <
                nc_radius + 0.2 * crit_radius[k]) {
                clear = false;
                break;
            }
        if (clear) charts.push_back(Chart{Chart::Kind::NonCritical, c, nc_radius, {}});
    }
    return charts;
}

ExtensionField::ExtensionField(BackgroundMetric background, FieldPair fields)
    : background_(std::move(background)), fields_(std::move(fields)) {}

Eigen::VectorXd ExtensionField::deficit(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd xv = fields_.eval_X(x);
    const Eigen::VectorXd yv = fields_.eval_Y(x);
    return yv - background_.value(x) * xv;
}

Eigen::MatrixXd ExtensionField::evaluate(const Eigen::VectorXd& x) const {
    for (std::size_t k = 0; k < background_.critical_points.size(); ++k)
        if ((x - background_.critical_points[k]).norm() <= snap_radius_)
            return background_.anchors[k];
    const Eigen::VectorXd xv = fields_.eval_X(x);
    const Eigen::VectorXd yv = fields_.eval_Y(x);
    const double pairing = xv.dot(yv);
    if (pairing <= 1e-12 * xv.norm() * yv.norm() || pairing <= 0.0) {
        std::ostringstream os;
        os << "continuous extension: <X,Y> = " << pairing
           << " is not positive away from the critical set at (";
        for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
        os << ")";
        throw NonPositivePairing(os.str());
    }
    const Eigen::MatrixXd g = background_.value(x);
    const Eigen::VectorXd r = yv - g * xv;
    Eigen::MatrixXd out = g;
    out += (r * yv.transpose() + yv * r.transpose()) / pairing;
    out -= (r.dot(xv) / (pairing * pairing)) * (yv * yv.transpose());
    return out;
}

ExtensionField continuous_extension(BackgroundMetric background, FieldPair fields) {
    if (background.critical_points.size() != background.anchors.size())
        throw Error("continuous_extension: anchors must match critical points");
    return ExtensionField(std::move(background), std::move(fields));
}

BackgroundMetric build_ck_background(const FieldPair& fields, int k,
                                     const std::vector<Eigen::VectorXd>& critical_points,
                                     const CkOptions& opts) {
    const int n = fields.dim;
    if (fields.order() < k + 1)
        throw OrderExceeded("build_ck_background: jets must have order >= k + 1");
    struct Patch {
        MetricSeries series;
        Eigen::VectorXd center;
        double r_inner, r_outer;
    };
    auto patches = std::make_shared<std::vector<Patch>>();
    BackgroundMetric bg;
    const Eigen::VectorXd extent = fields.domain.max - fields.domain.min;
    for (const auto& cp : critical_points) {
        const FieldPair local = fields.recentered(cp);
        MetricSeries series = build_metric_series(local, k, opts.series);
        double rmax = 0.5 * extent.minCoeff();
        for (const auto& other : critical_points)
            if (&other != &cp && (other - cp).norm() > 0)
                rmax = std::min(rmax, 0.45 * (other - cp).norm());
        const double rpos = check_positivity_region(series, opts.positivity_directions,
                                                    rmax, /*seed=*/0);
        const double r_outer = std::max(0.9 * rpos, 1e-12);
        Eigen::MatrixXd anchor =
            eval_metric_series(series, cp).inverse();
        anchor = 0.5 * (anchor + anchor.transpose()).eval();
        bg.critical_points.push_back(cp);
        bg.anchors.push_back(anchor);
        patches->push_back(Patch{std::move(series), cp,
                                 opts.plateau_fraction * r_outer, r_outer});
    }
    bg.value = [patches, n](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
        double total = 0.0;
        for (const auto& p : *patches) {
            const double w = plateau_weight(p.center, p.r_inner, p.r_outer, x);
            if (w == 0.0) continue;
            Eigen::MatrixXd lower = eval_metric_series(p.series, x).inverse();
            g += w * 0.5 * (lower + lower.transpose());
            total += w;
        }
        if (total < 1.0) g += (1.0 - total) * Eigen::MatrixXd::Identity(n, n);
        return g;
    };
    return bg;
}

DirectionalProbe counterexample_probe(int refinement_levels, double step_scale) {
    // plane fields X = Y = x around the critical point at the origin
    FieldPair fp;
    fp.dim = 2;
    fp.domain = Box{Eigen::Vector2d(-2.0, -2.0), Eigen::Vector2d(2.0, 2.0)};
    const Eigen::Vector2d origin(0.0, 0.0);
    for (int comp = 0; comp < 2; ++comp) {
        Jet j(2, 2, origin);
        MultiIndex m(2, 0);
        m[comp] = 1;
        j.set_coeff(m, 1.0);
        fp.X.push_back(j);
        fp.Y.push_back(j);
    }
    // sheared smooth background equal to the identity at the origin
    BackgroundMetric bg;
    bg.value = [](const Eigen::VectorXd& x) {
        Eigen::Matrix2d g;
        g << 1.0 + x(1), 0.0, 0.0, 1.0;
        return Eigen::MatrixXd(g);
    };
    bg.critical_points.push_back(origin);
    bg.anchors.push_back(Eigen::MatrixXd::Identity(2, 2));
    const ExtensionField ext = continuous_extension(std::move(bg), fp);

    auto d1_g11 = [&](const Eigen::Vector2d& p, double h) {
        const Eigen::Vector2d e1(1.0, 0.0);
        return (ext.evaluate(p + h * e1)(0, 0) - ext.evaluate(p - h * e1)(0, 0)) /
               (2.0 * h);
    };
    DirectionalProbe probe;
    double t = 0.2;
    for (int level = 0; level < refinement_levels; ++level, t *= 0.5) {
        const double h = step_scale * t;
        probe.limit_axis = d1_g11(Eigen::Vector2d(t, 0.0), h);
        probe.limit_diagonal = d1_g11(Eigen::Vector2d(t, t), h);
    }
    probe.difference = std::abs(probe.limit_diagonal - probe.limit_axis);
    probe.g11_at_ones = ext.evaluate(Eigen::Vector2d(1.0, 1.0))(0, 0);
    probe.nondifferentiable = probe.difference > 0.25;
    return probe;
}

VerificationReport verify_global(const GlobalMetric& gm, const FieldPair& fields,
                                 int grid_per_axis, double residual_tol,
                                 int smoothness_order) {
    VerificationReport rep;
    rep.grid_per_axis = grid_per_axis;
    const int n = fields.dim;
    const Eigen::VectorXd extent = fields.domain.max - fields.domain.min;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= grid_per_axis;
    rep.grid_points = total;
    rep.chart_coverage.assign(gm.charts().size(), 0);
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();

    for (long s = 0; s < total; ++s) {
        long rem = s;
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) {
            const int gi = static_cast<int>(rem % grid_per_axis);
            rem /= grid_per_axis;
            x(i) = fields.domain.min(i) + (gi + 0.5) / grid_per_axis * extent(i);
        }
        const Eigen::VectorXd w = gm.weights(x);
        for (Eigen::Index k = 0; k < w.size(); ++k)
            if (w(k) > 0.0) ++rep.chart_coverage[static_cast<std::size_t>(k)];
        try {
            const Eigen::MatrixXd g = gm.evaluate(x);
            const Eigen::VectorXd xv = fields.eval_X(x);
            const Eigen::VectorXd yv = fields.eval_Y(x);
            const double res = (g * yv - xv).cwiseAbs().maxCoeff();
            const double scale = std::max(
                {1.0, xv.cwiseAbs().maxCoeff(),
                 g.cwiseAbs().maxCoeff() * yv.cwiseAbs().maxCoeff()});
            rep.max_residual = std::max(rep.max_residual, res);
            rep.max_residual_rel = std::max(rep.max_residual_rel, res / scale);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
            rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
        } catch (const NonPositivePairing&) {
            ++rep.pairing_violations;
            if (rep.violation_examples.size() < 8) rep.violation_examples.push_back(x);
        } catch (const CoverageGap&) {
            ++rep.coverage_gaps;
        }
    }

    // finite-difference smoothness probe: halving the step should keep the
    // directional derivative estimates consistent for a C^p field
    if (smoothness_order > 0) {
        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> unif(0.25, 0.75);
        const double h0 = 1e-3 * extent.maxCoeff();
        for (int p = 1; p <= smoothness_order; ++p) {
            double worst = 0.0;
            for (int trial = 0; trial < 16; ++trial) {
                Eigen::VectorXd x(n);
                for (int i = 0; i < n; ++i)
                    x(i) = fields.domain.min(i) + unif(rng) * extent(i);
                const int axis = trial % n;
                auto fd = [&](double h) {
                    // central p-th difference of g_00 along the axis
                    double acc = 0.0;
                    for (int j = 0; j <= p; ++j) {
                        double binom = 1.0;
                        for (int t2 = 0; t2 < j; ++t2)
                            binom = binom * (p - t2) / (t2 + 1);
                        Eigen::VectorXd xx = x;
                        xx(axis) += (0.5 * p - j) * h;
                        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
                        acc += sign * binom * gm.evaluate(xx)(0, 0);
                    }
                    return acc / std::pow(h, p);
                };
                try {
                    worst = std::max(worst, std::abs(fd(h0) - fd(0.5 * h0)));
                } catch (const Error&) {
                    // probe points that fall outside the covered region are skipped
                }
            }
            rep.smoothness.push_back({double(p), worst});
        }
    }

    rep.residual_pass = rep.max_residual_rel <= residual_tol &&
                        rep.pairing_violations == 0 && rep.coverage_gaps == 0;
    rep.positivity_pass = rep.min_eigenvalue > 0.0;
    return rep;
}

nlohmann::json VerificationReport::to_json() const {
    nlohmann::json doc;
    doc["grid_per_axis"] = grid_per_axis;
    doc["grid_points"] = grid_points;
    doc["max_residual"] = max_residual;
    doc["max_residual_rel"] = max_residual_rel;
    doc["min_eigenvalue"] = min_eigenvalue;
    doc["chart_coverage"] = chart_coverage;
    doc["pairing_violations"] = pairing_violations;
    nlohmann::json ex = nlohmann::json::array();
    for (const auto& v : violation_examples)
        ex.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    doc["violation_examples"] = std::move(ex);
    doc["coverage_gaps"] = coverage_gaps;
    doc["smoothness_probes"] = smoothness;
    doc["residual_pass"] = residual_pass;
    doc["positivity_pass"] = positivity_pass;
    return doc;
}

std::string VerificationReport::to_csv(const GlobalMetric& gm) const {
    const FieldPair& fields = gm.fields();
    const int n = fields.dim;
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < n; ++i) os << "x" << i << ",";
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) os << "g" << a << b << (a == n - 1 && b == n - 1 ? "" : ",");
    os << "\n";
    const Eigen::VectorXd extent = fields.domain.max - fields.domain.min;
    const int g = std::max(grid_per_axis, 2);
    long total = 1;
    for (int i = 0; i < n; ++i) total *= g;
    for (long s = 0; s < total; ++s) {
        long rem = s;
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) {
            const int gi = static_cast<int>(rem % g);
            rem /= g;
            x(i) = fields.domain.min(i) + (gi + 0.5) / g * extent(i);
        }
        try {
            const Eigen::MatrixXd gv = gm.evaluate(x);
            for (int i = 0; i < n; ++i) os << x(i) << ",";
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    os << gv(a, b) << (a == n - 1 && b == n - 1 ? "" : ",");
            os << "\n";
        } catch (const Error&) {
            // leave uncovered or invalid grid points out of the dump
        }
    }
    return os.str();
}

nlohmann::json GlobalMetric::to_json() const {
    nlohmann::json doc;
    doc["fields"] = serialize_field_spec(fields_);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : charts_) {
        nlohmann::json ch;
        ch["kind"] = c.kind == Chart::Kind::Critical ? "critical" : "noncritical";
        ch["center"] = std::vector<double>(c.center.data(), c.center.data() + c.center.size());
        ch["radius"] = c.radius;
        if (c.series) ch["series"] = c.series->to_json();
        arr.push_back(std::move(ch));
    }
    doc["charts"] = std::move(arr);
    return doc;
}

GlobalMetric GlobalMetric::from_json(const nlohmann::json& doc) {
    FieldPair fields = parse_field_spec(doc.at("fields"));
    std::vector<Chart> charts;
    for (const auto& ch : doc.at("charts")) {
        Chart c;
        c.kind = ch.at("kind").get<std::string>() == "critical" ? Chart::Kind::Critical
                                                                : Chart::Kind::NonCritical;
        const auto cv = ch.at("center").get<std::vector<double>>();
        c.center = Eigen::Map<const Eigen::VectorXd>(cv.data(),
                                                     static_cast<Eigen::Index>(cv.size()));
        c.radius = ch.at("radius").get<double>();
        if (ch.contains("series")) c.series = MetricSeries::from_json(ch.at("series"));
        charts.push_back(std::move(c));
    }
    return GlobalMetric(std::move(charts), std::move(fields));
}

}  // namespace gradmetric
