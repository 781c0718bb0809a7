#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "gradmetric/assembler.hpp"
#include "oracles.hpp"

using namespace gradmetric;

namespace {

FieldPair radial_field_2d(int order = 4) {
    FieldPair fp;
    fp.dim = 2;
    fp.domain = Box{Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)};
    for (int c = 0; c < 2; ++c) {
        Jet j(2, order, Eigen::Vector2d::Zero());
        MultiIndex m(2, 0);
        m[c] = 1;
        j.set_coeff(m, 1.0);
        fp.X.push_back(j);
        fp.Y.push_back(j);
    }
    return fp;
}

}  // namespace

TEST_CASE("bump_weight") {
    const Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
    CHECK(bump_weight(c, 1.0, c) == 1.0);
    CHECK(bump_weight(c, 1.0, Eigen::Vector2d(1.0, 0.0)) == 0.0);
    CHECK(bump_weight(c, 1.0, Eigen::Vector2d(2.0, 0.3)) == 0.0);
    SUBCASE("vanishes smoothly across the support boundary") {
        // one-sided finite differences of increasing order stay tiny at r = 1
        auto f = [&](double r) {
            return bump_weight(c, 1.0, Eigen::Vector2d(r, 0.0));
        };
        const double h = 1e-2;
        for (int order = 1; order <= 4; ++order) {
            double acc = 0.0;
            for (int j = 0; j <= order; ++j) {
                double binom = 1.0;
                for (int t = 0; t < j; ++t) binom = binom * (order - t) / (t + 1);
                acc += ((j % 2 == 0) ? 1.0 : -1.0) * binom * f(1.0 - j * h);
            }
            CHECK(std::abs(acc / std::pow(h, order)) <= 1e-8);
        }
    }
}

TEST_CASE("plateau_weight freezes an inner ball") {
    const Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
    CHECK(plateau_weight(c, 0.5, 1.0, Eigen::Vector2d(0.2, 0.1)) == 1.0);
    CHECK(plateau_weight(c, 0.5, 1.0, Eigen::Vector2d(0.5, 0.0)) == 1.0);
    CHECK(plateau_weight(c, 0.5, 1.0, Eigen::Vector2d(1.0, 0.0)) == 0.0);
    const double mid = plateau_weight(c, 0.5, 1.0, Eigen::Vector2d(0.75, 0.0));
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
}

TEST_CASE("assemble_global") {
    const FieldPair fp = radial_field_2d();
    SUBCASE("a single covering chart reproduces its local metric") {
        MetricSeries series = build_metric_series(fp, 3);
        std::vector<Chart> charts{
            Chart{Chart::Kind::Critical, Eigen::Vector2d::Zero(), 3.0, series}};
        const GlobalMetric gm = assemble_global(charts, fp);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> unif(-0.9, 0.9);
        for (int t = 0; t < 50; ++t) {
            const Eigen::Vector2d x(unif(rng), unif(rng));
            const Eigen::MatrixXd g = gm.evaluate(x);
            const Eigen::MatrixXd local = eval_metric_series(series, x);
            CHECK((g - local).cwiseAbs().maxCoeff() <= 1e-14);
        }
    }
    SUBCASE("overlapping pointwise charts still map the fields to each other") {
        std::vector<Chart> charts{
            Chart{Chart::Kind::NonCritical, Eigen::Vector2d(0.5, 0.5), 0.6, {}},
            Chart{Chart::Kind::NonCritical, Eigen::Vector2d(0.7, 0.4), 0.6, {}}};
        const GlobalMetric gm = GlobalMetric(charts, fp);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unif(0.4, 0.7);
        int checked = 0;
        for (int t = 0; t < 2000 && checked < 1000; ++t) {
            const Eigen::Vector2d x(unif(rng), unif(rng));
            if (!(gm.weights(x).sum() > 0.0)) continue;
            ++checked;
            const Eigen::MatrixXd g = gm.evaluate(x);
            const Eigen::VectorXd xv = fp.eval_X(x);
            const Eigen::VectorXd yv = fp.eval_Y(x);
            CHECK((g * yv - xv).cwiseAbs().maxCoeff() <=
                  1e-10 * std::max(1.0, xv.cwiseAbs().maxCoeff()));
        }
        CHECK(checked == 1000);
    }
    SUBCASE("radial identity atlas evaluates to the identity everywhere") {
        MetricSeries series = build_metric_series(fp, 3);
        std::vector<Chart> charts{
            Chart{Chart::Kind::Critical, Eigen::Vector2d::Zero(), 0.6, series}};
        for (int k = 0; k < 12; ++k) {
            const double phi = 2 * M_PI * k / 12;
            charts.push_back(Chart{Chart::Kind::NonCritical,
                                   Eigen::Vector2d(0.8 * std::cos(phi), 0.8 * std::sin(phi)),
                                   0.75, {}});
        }
        const GlobalMetric gm = assemble_global(charts, fp, 11);
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> unif(-0.95, 0.95);
        for (int t = 0; t < 500; ++t) {
            const Eigen::Vector2d x(unif(rng), unif(rng));
            const Eigen::MatrixXd g = gm.evaluate(x);
            CHECK((g - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
    SUBCASE("uncovered domains are reported with the gap") {
        std::vector<Chart> charts{
            Chart{Chart::Kind::NonCritical, Eigen::Vector2d(0.8, 0.8), 0.1, {}}};
        CHECK_THROWS_AS((void)assemble_global(charts, fp, 5), CoverageGap);
    }
}

TEST_CASE("plan_atlas covers manufactured fields") {
    const auto made = oracles::manufacture_field(2, 8, 301, 2, 0.05);
    AtlasOptions opts;
    opts.series_order = 5;
    const std::vector<Eigen::VectorXd> cps{Eigen::VectorXd::Zero(2)};
    const auto charts = plan_atlas(made.fields, cps, opts);
    REQUIRE(!charts.empty());
    CHECK(charts.front().kind == Chart::Kind::Critical);
    const GlobalMetric gm = assemble_global(charts, made.fields, 9);
    const VerificationReport rep = verify_global(gm, made.fields, 24);
    CHECK(rep.max_residual_rel <= 1e-8);
    CHECK(rep.min_eigenvalue > 0.0);
    CHECK(rep.pairing_violations == 0);
}

TEST_CASE("continuous_extension") {
    const FieldPair fp = radial_field_2d();
    SUBCASE("zero deficit leaves the background untouched") {
        BackgroundMetric bg;
        bg.value = [](const Eigen::VectorXd&) {
            return Eigen::MatrixXd(Eigen::Matrix2d::Identity());
        };
        bg.critical_points.push_back(Eigen::Vector2d::Zero());
        bg.anchors.push_back(Eigen::Matrix2d::Identity());
        const ExtensionField ext = continuous_extension(bg, fp);
        const Eigen::Vector2d x(0.4, -0.2);
        CHECK((ext.evaluate(x) - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <=
              1e-15);
    }
    SUBCASE("sheared background reproduces the closed-form corrected entry") {
        BackgroundMetric bg;
        bg.value = [](const Eigen::VectorXd& x) {
            Eigen::Matrix2d g;
            g << 1.0 + x(1), 0.0, 0.0, 1.0;
            return Eigen::MatrixXd(g);
        };
        bg.critical_points.push_back(Eigen::Vector2d::Zero());
        bg.anchors.push_back(Eigen::Matrix2d::Identity());
        const ExtensionField ext = continuous_extension(bg, fp);
        // corrected leading entry is 1 + x2^5/(x1^2+x2^2)^2
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> unif(-0.9, 0.9);
        for (int t = 0; t < 200; ++t) {
            const Eigen::Vector2d x(unif(rng), unif(rng));
            if (x.norm() < 1e-3) continue;
            const double want =
                1.0 + std::pow(x(1), 5) / std::pow(x.squaredNorm(), 2);
            CHECK(ext.evaluate(x)(0, 0) == doctest::Approx(want).epsilon(1e-12));
        }
        CHECK(ext.evaluate(Eigen::Vector2d(1.0, 1.0))(0, 0) ==
              doctest::Approx(1.25).epsilon(1e-12));
    }
    SUBCASE("the extension solves the lowered equation at random points") {
        // arbitrary smooth positive background, anchored correctly at zero
        BackgroundMetric bg;
        bg.value = [](const Eigen::VectorXd& x) {
            Eigen::Matrix2d g;
            g << 1.0 + 0.3 * x(1), 0.1 * x(0), 0.1 * x(0), 1.0 + 0.2 * x(0) * x(0);
            return Eigen::MatrixXd(g);
        };
        bg.critical_points.push_back(Eigen::Vector2d::Zero());
        bg.anchors.push_back(Eigen::Matrix2d::Identity());
        const ExtensionField ext = continuous_extension(bg, fp);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> unif(-0.9, 0.9);
        for (int t = 0; t < 10000; ++t) {
            const Eigen::Vector2d x(unif(rng), unif(rng));
            if (x.norm() < 1e-6) continue;
            const Eigen::VectorXd xv = fp.eval_X(x);
            const Eigen::VectorXd yv = fp.eval_Y(x);
            const Eigen::VectorXd res = ext.evaluate(x) * xv - yv;
            const double scale = std::max(1.0, yv.cwiseAbs().maxCoeff());
            CHECK(res.cwiseAbs().maxCoeff() <= 1e-9 * scale);
        }
    }
    SUBCASE("approaches the anchor along rays") {
        BackgroundMetric bg;
        bg.value = [](const Eigen::VectorXd& x) {
            Eigen::Matrix2d g;
            g << 1.0 + x(1), 0.0, 0.0, 1.0;
            return Eigen::MatrixXd(g);
        };
        bg.critical_points.push_back(Eigen::Vector2d::Zero());
        bg.anchors.push_back(Eigen::Matrix2d::Identity());
        const ExtensionField ext = continuous_extension(bg, fp);
        std::mt19937_64 rng(7);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int ray = 0; ray < 20; ++ray) {
            Eigen::Vector2d dir(gauss(rng), gauss(rng));
            dir.normalize();
            double prev = 1e9;
            for (double r : {1e-2, 1e-3, 1e-4, 1e-5}) {
                const double dev = (ext.evaluate(r * dir) -
                                    Eigen::Matrix2d::Identity())
                                       .cwiseAbs()
                                       .maxCoeff();
                CHECK(dev <= prev + 1e-12);
                prev = dev;
            }
            CHECK(prev <= 1e-4);
        }
    }
}

TEST_CASE("ck background deficits vanish to the advertised order") {
    for (int k : {0, 1, 2}) {
        const auto made = oracles::manufacture_field(2, k + 2, 400 + k, 3);
        const std::vector<Eigen::VectorXd> cps{Eigen::VectorXd::Zero(2)};
        const BackgroundMetric bg = build_ck_background(made.fields, k, cps);
        const ExtensionField ext = continuous_extension(bg, made.fields);
        std::mt19937_64 rng(17);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<Eigen::Vector2d> dirs;
        for (int i = 0; i < 12; ++i) {
            Eigen::Vector2d d(gauss(rng), gauss(rng));
            dirs.push_back(d.normalized());
        }
        std::vector<double> radii, vals;
        for (int s = 0; s < 8; ++s) {
            const double r = 3e-3 * std::pow(10.0, s / 7.0);
            double worst = 0.0;
            for (const auto& d : dirs)
                worst = std::max(worst, ext.deficit(r * d).norm());
            radii.push_back(std::log(r));
            vals.push_back(std::log(std::max(worst, 1e-300)));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < radii.size(); ++i) {
            sx += radii[i];
            sy += vals[i];
            sxx += radii[i] * radii[i];
            sxy += radii[i] * vals[i];
        }
        const double nn = static_cast<double>(radii.size());
        const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        INFO("k = " << k << " slope " << slope);
        CHECK(slope >= k + 2 - 0.2);
    }
}

TEST_CASE("identity data leaves the ck background deficit at zero") {
    const FieldPair fp = radial_field_2d();
    const std::vector<Eigen::VectorXd> cps{Eigen::VectorXd::Zero(2)};
    const BackgroundMetric bg = build_ck_background(fp, 1, cps);
    const ExtensionField ext = continuous_extension(bg, fp);
    for (double r : {1e-1, 1e-2, 1e-3})
        CHECK(ext.deficit(Eigen::Vector2d(r, 0.5 * r)).norm() <= 1e-12);
}

TEST_CASE("counterexample probe certifies the directional mismatch") {
    const DirectionalProbe probe = counterexample_probe();
    CHECK(std::abs(probe.limit_axis) <= 1e-4);
    CHECK(probe.limit_diagonal == doctest::Approx(-0.5).epsilon(1e-4));
    CHECK(probe.difference == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(probe.g11_at_ones == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(probe.nondifferentiable);
    // refinement consistency
    const DirectionalProbe fine = counterexample_probe(20);
    CHECK(std::abs(fine.limit_axis - probe.limit_axis) <= 1e-5);
    CHECK(std::abs(fine.limit_diagonal - probe.limit_diagonal) <= 1e-5);
}

TEST_CASE("verify_global flags mis-signed fields") {
    FieldPair fp = radial_field_2d();
    MetricSeries series = build_metric_series(fp, 3);
    std::vector<Chart> charts{
        Chart{Chart::Kind::Critical, Eigen::Vector2d::Zero(), 0.5, series}};
    for (double sx : {-0.7, 0.7})
        for (double sy : {-0.7, 0.7})
            charts.push_back(
                Chart{Chart::Kind::NonCritical, Eigen::Vector2d(sx, sy), 0.9, {}});
    // flip X: pairing becomes negative away from the origin
    for (int c = 0; c < 2; ++c) fp.X[c] = fp.X[c].scaled(-1.0);
    const GlobalMetric gm(charts, fp);
    const VerificationReport rep = verify_global(gm, fp, 12);
    CHECK(rep.pairing_violations > 0);
    CHECK_FALSE(rep.residual_pass);
}

TEST_CASE("verification reports serialise with their pass flags") {
    const FieldPair fp = radial_field_2d();
    MetricSeries series = build_metric_series(fp, 3);
    std::vector<Chart> charts{
        Chart{Chart::Kind::Critical, Eigen::Vector2d::Zero(), 3.0, series}};
    const GlobalMetric gm = assemble_global(charts, fp);
    const VerificationReport rep = verify_global(gm, fp, 16, 1e-8, 2);
    const nlohmann::json doc = rep.to_json();
    CHECK(doc.at("residual_pass").get<bool>());
    CHECK(doc.at("positivity_pass").get<bool>());
    CHECK(doc.at("grid_points").get<long>() == 256);
    const std::string csv = rep.to_csv(gm);
    CHECK(csv.find("g00") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 257);
    // global metric artifacts round-trip
    const GlobalMetric back = GlobalMetric::from_json(gm.to_json());
    const Eigen::Vector2d probe(0.3, -0.4);
    CHECK((back.evaluate(probe) - gm.evaluate(probe)).cwiseAbs().maxCoeff() == 0.0);
}
