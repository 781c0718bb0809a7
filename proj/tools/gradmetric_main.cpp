#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "gradmetric/assembler.hpp"
#include "gradmetric/field_spec.hpp"
#include "gradmetric/qms.hpp"

namespace gm = gradmetric;
using nlohmann::json;

namespace {

// exit codes shared by every subcommand
constexpr int kOk = 0;
constexpr int kFailedChecks = 1;
constexpr int kConditionViolated = 2;
constexpr int kParseError = 3;
constexpr int kDegenerateCritical = 4;
constexpr int kNotErgodic = 5;
constexpr int kSingularState = 6;

struct RunConfig {
    std::string input;
    std::string output;
    int order = 6;
    int grid = 64;
    double tol_residual = 1e-8;
    unsigned long seed = 0;
    bool emit_csv = false;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw gm::Error("cannot write '" + path + "'");
    out << text;
}

void write_report(const RunConfig& cfg, json doc) {
    doc["config"] = {{"input", cfg.input},   {"order", cfg.order},
                     {"grid", cfg.grid},     {"tol_residual", cfg.tol_residual},
                     {"seed", cfg.seed},     {"emit_csv", cfg.emit_csv}};
    write_text(cfg.output, doc.dump(2) + "\n");
}

int grid_for_dim(const RunConfig& cfg, int dim) {
    // keep the total grid size tractable in higher dimension
    long total = 1;
    int g = cfg.grid;
    while (g > 2) {
        total = 1;
        bool ok = true;
        for (int i = 0; i < dim; ++i) {
            total *= g;
            if (total > 2'000'000) { ok = false; break; }
        }
        if (ok) break;
        --g;
    }
    return std::max(g, 2);
}

int cmd_build(const RunConfig& cfg) {
    const gm::FieldPair fields = gm::load_field_spec(cfg.input);

    // condition (i) scan on a coarse grid: positive pairing off the critical set
    const int pregrid = std::min(grid_for_dim(cfg, fields.dim), 16);
    const Eigen::VectorXd extent = fields.domain.max - fields.domain.min;
    long total = 1;
    for (int i = 0; i < fields.dim; ++i) total *= pregrid;
    for (long s = 0; s < total; ++s) {
        long rem = s;
        Eigen::VectorXd x(fields.dim);
        for (int i = 0; i < fields.dim; ++i) {
            x(i) = fields.domain.min(i) +
                   (static_cast<int>(rem % pregrid) + 0.5) / pregrid * extent(i);
            rem /= pregrid;
        }
        const Eigen::VectorXd xv = fields.eval_X(x);
        const Eigen::VectorXd yv = fields.eval_Y(x);
        if (yv.norm() > 1e-8 &&
            xv.dot(yv) <= 1e-12 * xv.norm() * yv.norm()) {
            std::cerr << "condition (i) violated: certificate NonPositivePairing at ("
                      << x.transpose() << ")\n";
            return kConditionViolated;
        }
    }

    const auto search = gm::locate_critical_points(fields);
    if (!search.degenerate_candidates.empty()) {
        std::cerr << "degenerate critical candidate at ("
                  << search.degenerate_candidates.front().transpose() << ")\n";
        return kDegenerateCritical;
    }
    // condition (ii): zeros of Y must be zeros of X
    for (const auto& cp : search.points) {
        const double xnorm = fields.eval_X(cp).cwiseAbs().maxCoeff();
        if (xnorm > 1e-8) {
            std::cerr << "condition (ii) violated: |X| = " << xnorm
                      << " at the critical point (" << cp.transpose() << ")\n";
            return kConditionViolated;
        }
    }

    gm::AtlasOptions atlas;
    atlas.series_order = cfg.order;
    const auto charts = gm::plan_atlas(fields, search.points, atlas);
    const gm::GlobalMetric metric = gm::assemble_global(charts, fields);
    const int grid = grid_for_dim(cfg, fields.dim);
    const gm::VerificationReport report =
        gm::verify_global(metric, fields, grid, cfg.tol_residual);

    json doc;
    doc["metric"] = metric.to_json();
    doc["critical_points"] = json::array();
    for (const auto& cp : search.points)
        doc["critical_points"].push_back(
            std::vector<double>(cp.data(), cp.data() + cp.size()));
    doc["verification"] = report.to_json();
    write_report(cfg, std::move(doc));
    if (cfg.emit_csv)
        write_text(cfg.output + ".csv", report.to_csv(metric));
    if (report.pairing_violations > 0) {
        std::cerr << "condition (i) violated on the verification grid\n";
        return kConditionViolated;
    }
    std::cout << "build: residual " << report.max_residual_rel << ", min eigenvalue "
              << report.min_eigenvalue << "\n";
    return report.residual_pass && report.positivity_pass ? kOk : kFailedChecks;
}

int cmd_verify(const RunConfig& cfg) {
    std::ifstream in(cfg.input);
    if (!in) throw gm::SpecParseError("cannot open '" + cfg.input + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw gm::SpecParseError(e.what());
    }
    const json metric_doc = doc.contains("metric") ? doc.at("metric") : doc;
    const gm::GlobalMetric metric = gm::GlobalMetric::from_json(metric_doc);
    const gm::FieldPair& fields = metric.fields();
    const int grid = grid_for_dim(cfg, fields.dim);
    const gm::VerificationReport report =
        gm::verify_global(metric, fields, grid, cfg.tol_residual, /*smoothness=*/2);
    json out;
    out["verification"] = report.to_json();
    write_report(cfg, std::move(out));
    if (cfg.emit_csv) write_text(cfg.output + ".csv", report.to_csv(metric));
    std::cout << "verify: residual " << report.max_residual_rel << ", min eigenvalue "
              << report.min_eigenvalue << "\n";
    return report.residual_pass && report.positivity_pass ? kOk : kFailedChecks;
}

int cmd_qms(const RunConfig& cfg, int simplex_order) {
    const gm::qms::LindbladGenerator gen = gm::qms::load_generator_spec(cfg.input);
    gm::qms::GradientTolerances tols;
    const auto report = gm::qms::check_gradient_structure(
        gen, /*samples=*/256, static_cast<unsigned>(cfg.seed), tols);
    json doc;
    doc["gradient_structure"] = report.to_json(tols);
    doc["equivalence"] = {{"verdict", report.verdict},
                          {"bkm_detailed_balance", report.bkm_pass},
                          {"agree", report.verdict == report.bkm_pass}};
    if (simplex_order > 0 && report.verdict) {
        const auto simplex = gm::qms::build_simplex_metric(gen, simplex_order);
        doc["simplex_metric"] = {
            {"order", simplex_order},
            {"verify_defect", simplex.verify_defect},
            {"base_min_eigenvalue", simplex.base.min_eigenvalue},
            {"base_asym_defect", simplex.base.asym_defect},
            {"growth_flag", gm::to_string(simplex.series.growth.flag)}};
    }
    write_report(cfg, std::move(doc));
    std::cout << "qms: verdict " << (report.verdict ? "true" : "false")
              << ", detailed balance " << (report.bkm_pass ? "true" : "false") << "\n";
    return kOk;
}

int cmd_counterexample(const RunConfig& cfg) {
    const int levels = std::max(4, cfg.grid / 8);
    const auto probe = gm::counterexample_probe(levels);
    json doc;
    doc["limit_along_axis"] = probe.limit_axis;
    doc["limit_along_diagonal"] = probe.limit_diagonal;
    doc["difference"] = probe.difference;
    doc["g11_at_ones"] = probe.g11_at_ones;
    doc["nondifferentiable"] = probe.nondifferentiable;
    write_report(cfg, std::move(doc));
    std::cout << "counterexample: limits " << probe.limit_axis << " and "
              << probe.limit_diagonal
              << (probe.nondifferentiable ? " (not differentiable)" : "") << "\n";
    return kOk;
}

int cmd_selftest(const RunConfig& cfg) {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
        if (!ok) ++failures;
    };

    {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const int n = 3, N = 4;
        gm::Bilinear u{Eigen::MatrixXd(n, n)};
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                u.entries(i, j) = gauss(rng) + (i == j ? 3.0 : 0.0);
        gm::MultiTensor r(n, 1, N);
        for (auto& v : r.entries()) v = gauss(rng);
        std::vector<int> lower(N);
        std::iota(lower.begin(), lower.end(), 1);
        r = gm::symmetrize(r, lower);
        const auto t = gm::solve_order_n(u, r, N);
        const double res = gm::equation_residual(u, t, r, N);
        check("tensor hierarchy residual", res <= 1e-10 * gm::residual_scale(u, t, r));
    }
    {
        const auto probe = gm::counterexample_probe();
        check("extension counterexample", std::abs(probe.limit_diagonal + 0.5) < 1e-4 &&
                                              std::abs(probe.limit_axis) < 1e-4 &&
                                              std::abs(probe.g11_at_ones - 1.25) < 1e-10);
    }
    {
        std::mt19937_64 rng(cfg.seed + 1);
        std::normal_distribution<double> gauss(0.0, 1.0);
        bool ok = true;
        for (int trial = 0; trial < 32; ++trial) {
            const int n = 2 + static_cast<int>(trial % 5);
            Eigen::VectorXd x(n), y(n);
            for (int i = 0; i < n; ++i) {
                x(i) = gauss(rng);
                y(i) = gauss(rng);
            }
            if (x.dot(y) <= 1e-6) continue;
            const auto local = gm::build_noncritical_metric(x, y);
            ok = ok && (local.G_std * y - x).norm() <= 1e-10 * std::max(1.0, x.norm());
        }
        check("pointwise construction", ok);
    }
    return failures == 0 ? kOk : kFailedChecks;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"construct and verify Riemannian metrics g with Y = gX, and "
                 "analyse quantum Markov semigroup gradient structures"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    int simplex_order = 0;

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        auto* in = sub->add_option("--input", cfg.input, "input document");
        if (needs_input) in->required();
        sub->add_option("--output", cfg.output, "output report path")->required();
        sub->add_option("--order", cfg.order, "series truncation order");
        sub->add_option("--grid", cfg.grid, "grid resolution per axis");
        sub->add_option("--tol-residual", cfg.tol_residual, "residual tolerance");
        sub->add_option("--seed", cfg.seed, "rng seed");
        sub->add_flag("--emit-csv", cfg.emit_csv, "dump sampled metric entries as CSV");
        sub->add_option("--config", config_path, "JSON config file; flags win");
    };

    auto* build = app.add_subcommand("build", "construct a global metric from a field spec");
    add_common(build, true);
    auto* verify = app.add_subcommand("verify", "re-verify a stored metric artifact");
    add_common(verify, true);
    auto* qms = app.add_subcommand("qms", "analyse a Lindblad generator spec");
    add_common(qms, true);
    qms->add_option("--simplex-order", simplex_order,
                    "also build the entropy metric series of this order");
    auto* cex = app.add_subcommand("counterexample",
                                   "reproduce the non-differentiable extension probe");
    add_common(cex, false);
    auto* selftest = app.add_subcommand("selftest", "run built-in sanity checks");
    add_common(selftest, false);
    selftest->get_option("--output")->required(false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw gm::SpecParseError("cannot open config '" + config_path + "'");
            json file_cfg;
            in >> file_cfg;
            CLI::App* active = app.get_subcommands().front();
            auto maybe = [&](const char* key, auto& slot) {
                using T = std::decay_t<decltype(slot)>;
                if (file_cfg.contains(key) && active->count(std::string("--") + key) == 0)
                    slot = file_cfg.at(key).get<T>();
            };
            maybe("input", cfg.input);
            maybe("output", cfg.output);
            maybe("order", cfg.order);
            maybe("grid", cfg.grid);
            if (file_cfg.contains("tol_residual") && active->count("--tol-residual") == 0)
                cfg.tol_residual = file_cfg.at("tol_residual").get<double>();
            maybe("seed", cfg.seed);
            if (file_cfg.contains("emit_csv") && active->count("--emit-csv") == 0)
                cfg.emit_csv = file_cfg.at("emit_csv").get<bool>();
        }
        if (app.got_subcommand(build)) return cmd_build(cfg);
        if (app.got_subcommand(verify)) return cmd_verify(cfg);
        if (app.got_subcommand(qms)) return cmd_qms(cfg, simplex_order);
        if (app.got_subcommand(cex)) return cmd_counterexample(cfg);
        if (app.got_subcommand(selftest)) return cmd_selftest(cfg);
    } catch (const gm::ConditionThreeViolated& e) {
        std::cerr << "condition (iii) violated: " << e.what() << "\n";
        return kConditionViolated;
    } catch (const gm::NonPositivePairing& e) {
        std::cerr << "condition (i) violated: " << e.what() << "\n";
        return kConditionViolated;
    } catch (const gm::SpecParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParseError;
    } catch (const gm::SpecDimensionError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParseError;
    } catch (const gm::NotErgodic& e) {
        std::cerr << e.what() << "\n";
        return kNotErgodic;
    } catch (const gm::SingularState& e) {
        std::cerr << e.what() << "\n";
        return kSingularState;
    } catch (const gm::DegenerateForm& e) {
        std::cerr << "degenerate derivative form: " << e.what() << "\n";
        return kDegenerateCritical;
    } catch (const gm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailedChecks;
    }
    return kOk;
}
