#include "gradmetric/tensor_equations.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradmetric/multi_index.hpp"

namespace gradmetric {

namespace {

std::size_t ipow(int base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
    return r;
}

/// flat index of a sorted lower tuple under row-major layout
std::size_t tuple_flat(std::span<const int> tuple, int n) {
    std::size_t f = 0;
    for (int c : tuple) f = f * n + static_cast<std::size_t>(c);
    return f;
}

/// map from every flat lower position to the flat position of its sorted
/// representative
std::vector<std::size_t> orbit_representatives(int n, int length) {
    const std::size_t total = ipow(n, length);
    std::vector<std::size_t> rep(total);
    std::vector<int> idx(length);
    for (std::size_t f = 0; f < total; ++f) {
        std::size_t rem = f;
        for (int i = length - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(rem % n);
            rem /= n;
        }
        std::sort(idx.begin(), idx.end());
        rep[f] = tuple_flat(idx, n);
    }
    return rep;
}

void check_equation_shapes(const Bilinear& u, const MultiTensor& r, int order) {
    if (order < 2) throw InvalidOrder("tensor equation: order must be at least 2");
    if (r.upper_rank() != 1 || r.lower_rank() != order)
        throw InvalidContraction("tensor equation: R must be one-up/" +
                                 std::to_string(order) + "-down");
    if (r.dim() != u.dim())
        throw InvalidContraction("tensor equation: U and R dimension mismatch");
}

}  // namespace

TensorEquation TensorEquation::make(int order, Bilinear u, MultiTensor r,
                                    double cond_bound) {
    check_equation_shapes(u, r, order);
    invert_bilinear(u, cond_bound);  // throws DegenerateForm if unusable
    std::vector<int> lower(static_cast<std::size_t>(order));
    std::iota(lower.begin(), lower.end(), 1);
    return TensorEquation{order, std::move(u), symmetrize(r, lower)};
}

MultiTensor solve_order2(const Bilinear& u, const MultiTensor& r) {
    check_equation_shapes(u, r, 2);
    const int n = u.dim();
    const Eigen::MatrixXd& U = u.entries;
    const Eigen::MatrixXd Ui = invert_bilinear(u).entries;
    MultiTensor t(n, 2, 1);
    auto R = [&](int a, int c, int d) {
        return r[(static_cast<std::size_t>(a) * n + c) * n + d];
    };
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                double s1 = 0, s2 = 0, s3 = 0;
                for (int d = 0; d < n; ++d) {
                    s1 += Ui(b, d) * R(a, c, d);
                    s2 += Ui(a, d) * R(b, c, d);
                }
                for (int g = 0; g < n; ++g)
                    for (int ap = 0; ap < n; ++ap)
                        for (int bp = 0; bp < n; ++bp)
                            s3 += U(c, g) * Ui(a, ap) * Ui(b, bp) * R(g, ap, bp);
                const double val = 0.5 * (s1 + s2 - s3);
                t[(static_cast<std::size_t>(a) * n + b) * n + c] = val;
                t[(static_cast<std::size_t>(b) * n + a) * n + c] = val;
            }
    t.declare_symmetric({0, 1});
    return t;
}

MultiTensor solve_order_n(const Bilinear& u, const MultiTensor& r, int order) {
    check_equation_shapes(u, r, order);
    const int n = u.dim();
    const int N = order;
    const Eigen::MatrixXd& U = u.entries;
    const Eigen::MatrixXd Ui = invert_bilinear(u).entries;

    const std::size_t rest_sz = ipow(n, N - 2);   // lower block beyond (x, y)
    const std::size_t out_lower = ipow(n, N - 1);

    // core[a][b][g'][rest] = U^{a a'} U^{b b'} R^{g'}_{a' b' rest}
    std::vector<double> core(static_cast<std::size_t>(n) * n * n * rest_sz, 0.0);
    auto core_at = [&](int a, int b, int g, std::size_t rest) -> double& {
        return core[((static_cast<std::size_t>(a) * n + b) * n + g) * rest_sz + rest];
    };
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
            for (int g = 0; g < n; ++g)
                for (std::size_t rest = 0; rest < rest_sz; ++rest) {
                    double acc = 0.0;
                    for (int x = 0; x < n; ++x) {
                        const std::size_t rx =
                            (static_cast<std::size_t>(g) * n + x) * n * rest_sz;
                        for (int y = 0; y < n; ++y)
                            acc += Ui(a, x) * Ui(b, y) *
                                   r[rx + static_cast<std::size_t>(y) * rest_sz + rest];
                    }
                    core_at(a, b, g, rest) = acc;
                    core_at(b, a, g, rest) = acc;
                }

    MultiTensor t(n, 2, N - 1);
    const auto tuples = sorted_tuples(n, N - 1);
    std::vector<int> rest_tuple(static_cast<std::size_t>(std::max(N - 2, 0)));
    for (const auto& gs : tuples) {
        const std::size_t gflat = tuple_flat(gs, n);
        // flat positions of the tuple with entry i removed (still sorted)
        std::vector<std::size_t> rest_flat(gs.size());
        for (std::size_t i = 0; i < gs.size(); ++i) {
            rest_tuple.clear();
            for (std::size_t j = 0; j < gs.size(); ++j)
                if (j != i) rest_tuple.push_back(gs[j]);
            rest_flat[i] = tuple_flat(rest_tuple, n);
        }
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                double s12 = 0.0;
                for (int d = 0; d < n; ++d) {
                    const double rad = r[(static_cast<std::size_t>(a) * n + d) * out_lower + gflat];
                    const double rbd = r[(static_cast<std::size_t>(b) * n + d) * out_lower + gflat];
                    s12 += Ui(b, d) * rad + Ui(a, d) * rbd;
                }
                double s3 = 0.0;
                for (std::size_t i = 0; i < gs.size(); ++i)
                    for (int g = 0; g < n; ++g)
                        s3 += U(gs[i], g) * core_at(a, b, g, rest_flat[i]);
                double val = s12;
                if (N >= 2 && !gs.empty()) val -= s3 / (N - 1);
                val /= N;
                t[(static_cast<std::size_t>(a) * n + b) * out_lower + gflat] = val;
                t[(static_cast<std::size_t>(b) * n + a) * out_lower + gflat] = val;
            }
    }
    // broadcast sorted representatives onto the full dense lower block
    if (N >= 3) {
        const auto rep = orbit_representatives(n, N - 1);
        for (int ab = 0; ab < n * n; ++ab) {
            const std::size_t off = static_cast<std::size_t>(ab) * out_lower;
            for (std::size_t f = 0; f < out_lower; ++f)
                if (rep[f] != f) t[off + f] = t[off + rep[f]];
        }
    }
    t.declare_symmetric({0, 1});
    if (N >= 3) {
        std::vector<int> lower(static_cast<std::size_t>(N - 1));
        std::iota(lower.begin(), lower.end(), 2);
        t.declare_symmetric(lower);
    }
    return t;
}

MultiTensor solve_order_n(const TensorEquation& eq) {
    return solve_order_n(eq.U, eq.R, eq.order);
}

double equation_residual(const Bilinear& u, const MultiTensor& t,
                         const MultiTensor& r, int order) {
    check_equation_shapes(u, r, order);
    if (t.upper_rank() != 2 || t.lower_rank() != order - 1 || t.dim() != u.dim())
        throw InvalidContraction("equation_residual: T must be two-up/(N-1)-down");
    const int n = u.dim();
    const int N = order;
    const Eigen::MatrixXd& U = u.entries;
    const std::size_t lower_sz = ipow(n, N);
    const std::size_t t_lower = ipow(n, N - 1);
    std::vector<int> cs(static_cast<std::size_t>(N));
    std::vector<int> rest(static_cast<std::size_t>(N - 1));
    double worst = 0.0;
    for (int a = 0; a < n; ++a) {
        const std::size_t r_off = static_cast<std::size_t>(a) * lower_sz;
        for (std::size_t f = 0; f < lower_sz; ++f) {
            std::size_t rem = f;
            for (int i = N - 1; i >= 0; --i) {
                cs[i] = static_cast<int>(rem % n);
                rem /= n;
            }
            double acc = 0.0;
            for (int i = 0; i < N; ++i) {
                rest.clear();
                for (int j = 0; j < N; ++j)
                    if (j != i) rest.push_back(cs[j]);
                const std::size_t rf = tuple_flat(rest, n);
                for (int b = 0; b < n; ++b)
                    acc += U(cs[i], b) *
                           t[(static_cast<std::size_t>(a) * n + b) * t_lower + rf];
            }
            worst = std::max(worst, std::abs(acc - r[r_off + f]));
        }
    }
    return worst;
}

double residual_scale(const Bilinear& u, const MultiTensor& t, const MultiTensor& r) {
    double un = 0.0;
    for (int i = 0; i < u.dim(); ++i)
        for (int j = 0; j < u.dim(); ++j) un = std::max(un, std::abs(u.entries(i, j)));
    return std::max({1.0, sup_norm(r), un * sup_norm(t)});
}

MultiTensor brute_force_solve(const TensorEquation& eq, std::size_t max_unknowns) {
    const int n = eq.U.dim();
    const int N = eq.order;
    const Eigen::MatrixXd& U = eq.U.entries;

    // unknowns: upper pairs (a<=b) x sorted lower tuples of length N-1
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) pairs.emplace_back(a, b);
    const auto lower_tuples = sorted_tuples(n, N - 1);
    const std::size_t n_unknowns = pairs.size() * lower_tuples.size();
    if (n_unknowns > max_unknowns)
        throw ProblemTooLarge("brute_force_solve: " + std::to_string(n_unknowns) +
                              " unknowns exceed the configured bound");
    std::vector<std::size_t> pair_col(static_cast<std::size_t>(n) * n);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        pair_col[static_cast<std::size_t>(pairs[p].first) * n + pairs[p].second] = p;
        pair_col[static_cast<std::size_t>(pairs[p].second) * n + pairs[p].first] = p;
    }
    // sorted tuple -> column block
    std::vector<std::size_t> lower_col(ipow(n, N - 1));
    for (std::size_t q = 0; q < lower_tuples.size(); ++q)
        lower_col[tuple_flat(lower_tuples[q], n)] = q;

    // equations: component a x sorted lower tuples of length N
    const auto eq_tuples = sorted_tuples(n, N);
    const std::size_t n_rows = static_cast<std::size_t>(n) * eq_tuples.size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows),
                                              static_cast<Eigen::Index>(n_unknowns));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n_rows));
    const std::size_t r_lower = ipow(n, N);
    std::vector<int> rest(static_cast<std::size_t>(N - 1));
    std::size_t row = 0;
    for (int a = 0; a < n; ++a)
        for (const auto& cs : eq_tuples) {
            rhs(static_cast<Eigen::Index>(row)) =
                eq.R[static_cast<std::size_t>(a) * r_lower + tuple_flat(cs, n)];
            for (int i = 0; i < N; ++i) {
                rest.clear();
                for (int j = 0; j < N; ++j)
                    if (j != i) rest.push_back(cs[j]);
                std::sort(rest.begin(), rest.end());
                const std::size_t qcol = lower_col[tuple_flat(rest, n)];
                for (int b = 0; b < n; ++b) {
                    const std::size_t col =
                        pair_col[static_cast<std::size_t>(a) * n + b] * lower_tuples.size() +
                        qcol;
                    M(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
                        U(cs[i], b);
                }
            }
            ++row;
        }

    // minimum-norm least squares; the hierarchy is consistent for invertible
    // U (a closed-form solution exists), so M has full row rank and the
    // normal-equation route is safe.  Fall back to a rank-revealing solve.
    Eigen::VectorXd x;
    if (n_rows <= n_unknowns) {
        Eigen::MatrixXd G = M * M.transpose();
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        if (llt.info() == Eigen::Success)
            x = M.transpose() * llt.solve(rhs);
        else
            x = M.completeOrthogonalDecomposition().solve(rhs);
    } else {
        x = M.completeOrthogonalDecomposition().solve(rhs);
    }

    MultiTensor t(n, 2, N - 1);
    const std::size_t t_lower = ipow(n, N - 1);
    const auto rep = orbit_representatives(n, N - 1);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const std::size_t pcol = pair_col[static_cast<std::size_t>(a) * n + b];
            const std::size_t off = (static_cast<std::size_t>(a) * n + b) * t_lower;
            for (std::size_t f = 0; f < t_lower; ++f)
                t[off + f] = x(static_cast<Eigen::Index>(pcol * lower_tuples.size() +
                                                         lower_col[rep[f]]));
        }
    t.declare_symmetric({0, 1});
    return t;
}

}  // namespace gradmetric
