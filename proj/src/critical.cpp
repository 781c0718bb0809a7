#include "gradmetric/critical.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

namespace gradmetric {

namespace {

std::size_t ipow(int base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
    return r;
}

std::size_t tuple_flat(std::span<const int> tuple, int n) {
    std::size_t f = 0;
    for (int c : tuple) f = f * n + static_cast<std::size_t>(c);
    return f;
}

}  // namespace

std::string to_string(GrowthFit::Flag flag) {
    switch (flag) {
        case GrowthFit::Flag::NotFitted: return "not_fitted";
        case GrowthFit::Flag::Geometric: return "geometric";
        case GrowthFit::Flag::ExactPolynomial: return "exact_polynomial";
        case GrowthFit::Flag::NonGeometric: return "non_geometric";
    }
    return "unknown";
}

BaseMetricResult solve_base_metric(const Bilinear& a, const Bilinear& u,
                                   double asym_tol, double eig_tol) {
    const Bilinear ui = invert_bilinear(u);
    const Eigen::MatrixXd g = ui.entries * a.entries;
    BaseMetricResult res;
    res.asym_defect = (g - g.transpose()).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd gs = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gs);
    res.min_eigenvalue = es.eigenvalues().minCoeff();
    const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-300);
    res.exists = res.asym_defect <= asym_tol * scale && res.min_eigenvalue > eig_tol;
    res.g_bar = gs;
    return res;
}

MultiTensor build_rhs_tensor(int order, const FieldPair& fp,
                             std::span<const MultiTensor> series_so_far) {
    const int n = fp.dim;
    const int N = order;
    if (N < 2) throw InvalidOrder("build_rhs_tensor: order must be at least 2");
    if (static_cast<int>(series_so_far.size()) < N - 1)
        throw InvalidOrder("build_rhs_tensor: need series coefficients up to order N-2");
    if (fp.order() < N)
        throw OrderExceeded("build_rhs_tensor: jets shorter than the requested order");

    MultiTensor r(n, 1, N);
    const std::size_t lower_sz = ipow(n, N);
    const auto tuples = sorted_tuples(n, N);
    std::vector<int> tsub, rest;
    MultiIndex m_rest(n);
    for (const auto& cs : tuples) {
        const std::size_t cflat = tuple_flat(cs, n);
        const MultiIndex m_full = tuple_to_multi(n, cs);
        for (int a = 0; a < n; ++a) {
            double val = fp.X[a].derivative_at_base(m_full);
            for (unsigned mask = 0; mask < (1u << N); ++mask) {
                const int k = std::popcount(mask);
                if (k > N - 2) continue;
                tsub.clear();
                std::fill(m_rest.begin(), m_rest.end(), 0);
                for (int i = 0; i < N; ++i) {
                    if (mask & (1u << i)) tsub.push_back(cs[i]);
                    else ++m_rest[cs[i]];
                }
                const MultiTensor& tk = series_so_far[static_cast<std::size_t>(k)];
                const std::size_t tl = ipow(n, k);
                const std::size_t tflat = tuple_flat(tsub, n);
                for (int b = 0; b < n; ++b)
                    val -= tk[(static_cast<std::size_t>(a) * n + b) * tl + tflat] *
                           fp.Y[b].derivative_at_base(m_rest);
            }
            r[static_cast<std::size_t>(a) * lower_sz + cflat] = val;
        }
    }
    // broadcast sorted representatives across the symmetric lower block
    std::vector<int> idx(static_cast<std::size_t>(N));
    for (std::size_t f = 0; f < lower_sz; ++f) {
        std::size_t rem = f;
        for (int i = N - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(rem % n);
            rem /= n;
        }
        std::vector<int> srt = idx;
        std::sort(srt.begin(), srt.end());
        const std::size_t rf = tuple_flat(srt, n);
        if (rf != f)
            for (int a = 0; a < n; ++a)
                r[static_cast<std::size_t>(a) * lower_sz + f] =
                    r[static_cast<std::size_t>(a) * lower_sz + rf];
    }
    std::vector<int> lower(static_cast<std::size_t>(N));
    std::iota(lower.begin(), lower.end(), 1);
    r.declare_symmetric(lower);
    return r;
}

MetricSeries build_metric_series(const FieldPair& fp, int order,
                                 const SeriesOptions& opts) {
    const int n = fp.dim;
    const Eigen::VectorXd base = fp.X.front().base_point();
    const double x_at = fp.eval_X(base).cwiseAbs().maxCoeff();
    const double y_at = fp.eval_Y(base).cwiseAbs().maxCoeff();
    if (x_at > opts.criticality_tol || y_at > opts.criticality_tol)
        throw NotCritical("build_metric_series: base point is not a critical point (|X| = " +
                          std::to_string(x_at) + ", |Y| = " + std::to_string(y_at) + ")");
    if (fp.order() < order + 1)
        throw OrderExceeded("build_metric_series: jets must have order >= series order + 1");

    Bilinear A{Eigen::MatrixXd(n, n)}, U{Eigen::MatrixXd(n, n)};
    MultiIndex e(n, 0);
    for (int c = 0; c < n; ++c) {
        std::fill(e.begin(), e.end(), 0);
        e[c] = 1;
        for (int b = 0; b < n; ++b) {
            A.entries(c, b) = fp.X[b].derivative_at_base(e);
            U.entries(c, b) = fp.Y[b].derivative_at_base(e);
        }
    }
    const BaseMetricResult bm = solve_base_metric(A, U, opts.asym_tol, opts.eig_tol);
    if (!bm.exists) throw ConditionThreeViolated(bm);

    MetricSeries ms;
    ms.dim = n;
    ms.base = base;
    ms.order = order;
    MultiTensor t0 = tensor_from_matrix(bm.g_bar, 2);
    t0.declare_symmetric({0, 1});
    ms.coeffs.push_back(std::move(t0));
    for (int N = 2; N <= order + 1; ++N) {
        const MultiTensor r = build_rhs_tensor(N, fp, ms.coeffs);
        ms.coeffs.push_back(solve_order_n(U, r, N));
    }
    if (order >= 3) ms.growth = fit_growth(ms);
    return ms;
}

GrowthFit fit_growth(const MetricSeries& ms, double rms_bound) {
    GrowthFit fit;
    std::vector<std::pair<int, double>> pts;  // (N, log(t_N/N!))
    int last_nonzero = 0;
    for (int N = 1; N <= ms.order; ++N) {
        const double t = sup_norm(ms.coeffs[static_cast<std::size_t>(N)]);
        if (t > 0.0) {
            pts.emplace_back(N, std::log(t / factorial(N)));
            last_nonzero = N;
        }
    }
    // finite series (zero tail) or too few points: no geometric rate to fit
    if (pts.size() < 3 || last_nonzero < ms.order) {
        fit.flag = pts.empty() || last_nonzero < ms.order
                       ? GrowthFit::Flag::ExactPolynomial
                       : GrowthFit::Flag::NotFitted;
        return fit;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [N, v] : pts) {
        sx += N; sy += v; sxx += double(N) * N; sxy += N * v;
    }
    const double count = static_cast<double>(pts.size());
    const double denom = count * sxx - sx * sx;
    const double slope = (count * sxy - sx * sy) / denom;
    const double icept = (sy - slope * sx) / count;
    double ss = 0.0, max_above = 0.0;
    for (auto [N, v] : pts) {
        const double dev = v - (icept + slope * N);
        ss += dev * dev;
        max_above = std::max(max_above, dev);
    }
    fit.p = std::exp(slope);
    fit.C = std::exp(icept + max_above);  // certified: t_N <= C N! p^N at every fitted N
    fit.rms = std::sqrt(ss / count);
    fit.flag = fit.rms > rms_bound ? GrowthFit::Flag::NonGeometric
                                   : GrowthFit::Flag::Geometric;
    return fit;
}

Eigen::MatrixXd eval_metric_series(const MetricSeries& ms, const Eigen::VectorXd& x,
                                   bool* outside_radius) {
    const int n = ms.dim;
    const Eigen::VectorXd dx = x - ms.base;
    if (outside_radius)
        *outside_radius = dx.cwiseAbs().sum() >= convergence_radius(ms);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (int N = 0; N <= ms.order; ++N) {
        const MultiTensor& t = ms.coeffs[static_cast<std::size_t>(N)];
        const std::size_t tl = ipow(n, N);
        for (const auto& m : multi_indices_of_degree(n, N)) {
            double w = 1.0 / multi_factorial(m);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < m[i]; ++k) w *= dx(i);
            const std::size_t mflat = tuple_flat(multi_to_tuple(m), n);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    g(a, b) += t[(static_cast<std::size_t>(a) * n + b) * tl + mflat] * w;
        }
    }
    return g;
}

double convergence_radius(const MetricSeries& ms) {
    if (ms.growth.flag == GrowthFit::Flag::Geometric && ms.growth.p > 0.0)
        return 1.0 / (ms.growth.p * ms.dim);
    return std::numeric_limits<double>::infinity();
}

double verify_order(const MetricSeries& ms, const FieldPair& fp, int upto) {
    const int n = ms.dim;
    if (fp.order() < upto)
        throw OrderExceeded("verify_order: jets shorter than the requested degree");
    // assemble the jets of g^{ab} from the series tensors
    std::vector<std::vector<Jet>> gjets(
        static_cast<std::size_t>(n),
        std::vector<Jet>(static_cast<std::size_t>(n), Jet(n, upto, ms.base)));
    for (int N = 0; N <= std::min(ms.order, upto); ++N) {
        const MultiTensor& t = ms.coeffs[static_cast<std::size_t>(N)];
        const std::size_t tl = ipow(n, N);
        for (const auto& m : multi_indices_of_degree(n, N)) {
            const std::size_t mflat = tuple_flat(multi_to_tuple(m), n);
            const double mf = multi_factorial(m);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const double c =
                        t[(static_cast<std::size_t>(a) * n + b) * tl + mflat] / mf;
                    if (c != 0.0) gjets[a][b].set_coeff(m, c);
                }
        }
    }
    double worst = 0.0;
    for (int a = 0; a < n; ++a) {
        Jet defect(n, upto, ms.base);
        for (int b = 0; b < n; ++b) defect = defect.add(gjets[a][b].multiply(fp.Y[b]));
        defect = defect.add(fp.X[a].scaled(-1.0));
        for (const auto& [m, c] : defect.coeffs())
            if (degree(m) <= upto) worst = std::max(worst, std::abs(c));
    }
    return worst;
}

double check_positivity_region(const MetricSeries& ms, int directions, double r_max,
                               unsigned seed, int steps) {
    const int n = ms.dim;
    {
        const Eigen::MatrixXd g0 = eval_metric_series(ms, ms.base);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g0);
        const double mineig = es.eigenvalues().minCoeff();
        if (mineig <= 0.0)
            throw ConditionThreeViolated(BaseMetricResult{false, g0, 0.0, mineig});
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Eigen::VectorXd> dirs;
    if (n == 1) {
        dirs.push_back(Eigen::VectorXd::Constant(1, 1.0));
        dirs.push_back(Eigen::VectorXd::Constant(1, -1.0));
    } else {
        for (int k = 0; k < directions; ++k) {
            Eigen::VectorXd d(n);
            do {
                for (int i = 0; i < n; ++i) d(i) = gauss(rng);
            } while (d.norm() < 1e-8);
            dirs.push_back(d.normalized());
        }
    }
    auto positive_at = [&](const Eigen::VectorXd& d, double r) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            eval_metric_series(ms, ms.base + r * d));
        return es.eigenvalues().minCoeff() > 0.0;
    };
    double radius = r_max;
    for (const auto& d : dirs) {
        // march outward for the first sign change, then bisect
        double lo = 0.0, hi = -1.0;
        for (int s = 1; s <= steps; ++s) {
            const double r = r_max * s / steps;
            if (r >= radius) break;
            if (!positive_at(d, r)) {
                hi = r;
                break;
            }
            lo = r;
        }
        if (hi < 0.0) continue;  // positive along this ray out to the current bound
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            (positive_at(d, mid) ? lo : hi) = mid;
        }
        radius = std::min(radius, lo);
    }
    return radius;
}

nlohmann::json MetricSeries::to_json() const {
    nlohmann::json doc;
    doc["dim"] = dim;
    doc["base"] = std::vector<double>(base.data(), base.data() + base.size());
    doc["order"] = order;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : coeffs) arr.push_back(t.entries());
    doc["coefficients"] = std::move(arr);
    doc["growth"] = {{"C", growth.C},
                     {"p", growth.p},
                     {"rms", growth.rms},
                     {"flag", to_string(growth.flag)}};
    return doc;
}

MetricSeries MetricSeries::from_json(const nlohmann::json& doc) {
    MetricSeries ms;
    ms.dim = doc.at("dim").get<int>();
    ms.order = doc.at("order").get<int>();
    const auto bp = doc.at("base").get<std::vector<double>>();
    ms.base = Eigen::Map<const Eigen::VectorXd>(bp.data(), static_cast<Eigen::Index>(bp.size()));
    const auto& arr = doc.at("coefficients");
    for (int N = 0; N < static_cast<int>(arr.size()); ++N) {
        MultiTensor t(ms.dim, 2, N);
        const auto vals = arr.at(N).get<std::vector<double>>();
        if (vals.size() != t.size())
            throw SpecParseError("metric series: coefficient array size mismatch");
        t.entries() = vals;
        t.declare_symmetric({0, 1});
        ms.coeffs.push_back(std::move(t));
    }
    const auto& gr = doc.at("growth");
    ms.growth.C = gr.at("C").get<double>();
    ms.growth.p = gr.at("p").get<double>();
    ms.growth.rms = gr.at("rms").get<double>();
    const std::string flag = gr.at("flag").get<std::string>();
    if (flag == "geometric") ms.growth.flag = GrowthFit::Flag::Geometric;
    else if (flag == "exact_polynomial") ms.growth.flag = GrowthFit::Flag::ExactPolynomial;
    else if (flag == "non_geometric") ms.growth.flag = GrowthFit::Flag::NonGeometric;
    else ms.growth.flag = GrowthFit::Flag::NotFitted;
    return ms;
}

}  // namespace gradmetric
