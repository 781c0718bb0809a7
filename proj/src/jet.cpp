#include "gradmetric/jet.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

namespace gradmetric {

Jet::Jet(int dim, int order, Eigen::VectorXd base)
    : dim_(dim), order_(order), base_(std::move(base)) {
    if (dim <= 0) throw Error("Jet: dimension must be positive");
    if (order < 0) throw Error("Jet: order must be nonnegative");
    if (base_.size() != dim) throw Error("Jet: base point dimension mismatch");
}

double Jet::coeff(const MultiIndex& m) const {
    auto it = coeffs_.find(m);
    return it == coeffs_.end() ? 0.0 : it->second;
}

void Jet::set_coeff(const MultiIndex& m, double value) {
    if (static_cast<int>(m.size()) != dim_) throw Error("Jet: multi-index dimension mismatch");
    if (degree(m) > order_)
        throw OrderExceeded("Jet: coefficient degree exceeds truncation order");
    coeffs_[m] = value;
}

void Jet::add_coeff(const MultiIndex& m, double value) {
    if (static_cast<int>(m.size()) != dim_) throw Error("Jet: multi-index dimension mismatch");
    if (degree(m) > order_)
        throw OrderExceeded("Jet: coefficient degree exceeds truncation order");
    coeffs_[m] += value;
}

double Jet::eval(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd dx = x - base_;
    double acc = 0.0;
    for (const auto& [m, c] : coeffs_) {
        double term = c;
        for (int i = 0; i < dim_; ++i)
            for (int k = 0; k < m[i]; ++k) term *= dx(i);
        acc += term;
    }
    return acc;
}

double Jet::derivative_at_base(const MultiIndex& m) const {
    if (static_cast<int>(m.size()) != dim_) throw Error("Jet: multi-index dimension mismatch");
    if (degree(m) > order_)
        throw OrderExceeded("derivative_at_base: degree exceeds jet order");
    return multi_factorial(m) * coeff(m);
}

Jet Jet::multiply(const Jet& other) const {
    if (dim_ != other.dim_ || base_ != other.base_)
        throw BaseMismatch("jet multiply: dimension or base point mismatch");
    Jet out(dim_, std::min(order_, other.order_), base_);
    MultiIndex m(dim_);
    for (const auto& [ma, ca] : coeffs_) {
        for (const auto& [mb, cb] : other.coeffs_) {
            int deg = 0;
            for (int i = 0; i < dim_; ++i) {
                m[i] = ma[i] + mb[i];
                deg += m[i];
            }
            if (deg <= out.order_) out.coeffs_[m] += ca * cb;
        }
    }
    return out;
}

Jet Jet::add(const Jet& other) const {
    if (dim_ != other.dim_ || base_ != other.base_)
        throw BaseMismatch("jet add: dimension or base point mismatch");
    Jet out(dim_, std::min(order_, other.order_), base_);
    for (const auto& [m, c] : coeffs_)
        if (degree(m) <= out.order_) out.coeffs_[m] += c;
    for (const auto& [m, c] : other.coeffs_)
        if (degree(m) <= out.order_) out.coeffs_[m] += c;
    return out;
}

Jet Jet::scaled(double factor) const {
    Jet out = *this;
    for (auto& [m, c] : out.coeffs_) c *= factor;
    return out;
}

Jet Jet::axis_derivative(int axis) const {
    if (axis < 0 || axis >= dim_) throw Error("axis_derivative: axis out of range");
    Jet out(dim_, std::max(order_ - 1, 0), base_);
    for (const auto& [m, c] : coeffs_) {
        if (m[axis] == 0) continue;
        MultiIndex md = m;
        --md[axis];
        out.coeffs_[md] += c * m[axis];
    }
    return out;
}

Jet Jet::recentered(const Eigen::VectorXd& new_base) const {
    if (new_base.size() != dim_) throw Error("recentered: base dimension mismatch");
    const Eigen::VectorXd shift = new_base - base_;
    Jet out(dim_, order_, new_base);
    // binomial expansion of (y + shift)^m around the new base
    MultiIndex k(dim_);
    for (const auto& [m, c] : coeffs_) {
        std::vector<int> upto(m.begin(), m.end());
        k.assign(dim_, 0);
        while (true) {
            double w = c;
            for (int i = 0; i < dim_; ++i) {
                // binomial(m_i, k_i) * shift^(m_i - k_i)
                double binom = 1.0;
                for (int j = 0; j < k[i]; ++j)
                    binom = binom * (m[i] - j) / (j + 1);
                w *= binom;
                for (int j = 0; j < m[i] - k[i]; ++j) w *= shift(i);
            }
            out.coeffs_[k] += w;
            int axis = dim_ - 1;
            while (axis >= 0 && k[axis] == upto[axis]) {
                k[axis] = 0;
                --axis;
            }
            if (axis < 0) break;
            ++k[axis];
        }
    }
    // drop exact zeros introduced by cancellation-free shifts of sparse jets
    for (auto it = out.coeffs_.begin(); it != out.coeffs_.end();)
        it = (it->second == 0.0) ? out.coeffs_.erase(it) : std::next(it);
    return out;
}

bool Box::contains(const Eigen::VectorXd& x, double margin) const {
    for (int i = 0; i < x.size(); ++i)
        if (x(i) < min(i) - margin || x(i) > max(i) + margin) return false;
    return true;
}

Eigen::VectorXd FieldPair::eval_X(const Eigen::VectorXd& x) const {
    Eigen::VectorXd v(dim);
    for (int a = 0; a < dim; ++a) v(a) = X[a].eval(x);
    return v;
}

Eigen::VectorXd FieldPair::eval_Y(const Eigen::VectorXd& x) const {
    Eigen::VectorXd v(dim);
    for (int b = 0; b < dim; ++b) v(b) = Y[b].eval(x);
    return v;
}

Eigen::MatrixXd FieldPair::jacobian_Y(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd j(dim, dim);
    for (int b = 0; b < dim; ++b)
        for (int c = 0; c < dim; ++c) j(c, b) = Y[b].axis_derivative(c).eval(x);
    return j;
}

FieldPair FieldPair::recentered(const Eigen::VectorXd& new_base) const {
    FieldPair out;
    out.dim = dim;
    out.domain = domain;
    for (const auto& j : X) out.X.push_back(j.recentered(new_base));
    for (const auto& j : Y) out.Y.push_back(j.recentered(new_base));
    return out;
}

CriticalPointSearch locate_critical_points(const FieldPair& fp, double tol,
                                           int seeds_per_axis) {
    CriticalPointSearch result;
    const int n = fp.dim;
    // precompute Jacobian jets once
    std::vector<std::vector<Jet>> dY;
    for (int b = 0; b < n; ++b) {
        std::vector<Jet> row;
        for (int c = 0; c < n; ++c) row.push_back(fp.Y[b].axis_derivative(c));
        dY.push_back(std::move(row));
    }
    auto jac = [&](const Eigen::VectorXd& x) {
        Eigen::MatrixXd j(n, n);
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) j(c, b) = dY[b][c].eval(x);
        return j;
    };

    const Eigen::VectorXd extent = fp.domain.max - fp.domain.min;
    const double diam = extent.norm();
    std::vector<int> grid_idx(n, 0);
    const long total = static_cast<long>(std::pow(double(seeds_per_axis), n));
    auto dedupe_insert = [&](std::vector<Eigen::VectorXd>& list, const Eigen::VectorXd& p) {
        for (const auto& q : list)
            if ((q - p).norm() <= 10.0 * tol) return;
        list.push_back(p);
    };

    for (long s = 0; s < total; ++s) {
        long rem = s;
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) {
            grid_idx[i] = static_cast<int>(rem % seeds_per_axis);
            rem /= seeds_per_axis;
            const double frac = seeds_per_axis == 1
                                    ? 0.5
                                    : (grid_idx[i] + 0.5) / seeds_per_axis;
            x(i) = fp.domain.min(i) + frac * extent(i);
        }
        bool degenerate = false;
        bool diverged = false;
        for (int it = 0; it < 60; ++it) {
            const Eigen::VectorXd y = fp.eval_Y(x);
            if (y.norm() <= 0.01 * tol) break;
            const Eigen::MatrixXd j = jac(x);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(j.transpose());
            if (!lu.isInvertible() || lu.rcond() < 1e-14) {
                degenerate = y.norm() <= 1000.0 * tol;
                diverged = !degenerate;
                break;
            }
            // J(c,b) = d_c Y_b, so the Newton step solves J^T dx = y
            const Eigen::VectorXd step = lu.solve(y);
            x -= step;
            if (!x.allFinite() || (x - fp.domain.center()).norm() > 4.0 * diam) {
                diverged = true;
                break;
            }
        }
        if (diverged) continue;
        if (degenerate) {
            dedupe_insert(result.degenerate_candidates, x);
            continue;
        }
        if (fp.eval_Y(x).norm() <= tol && fp.domain.contains(x, 1e-9))
            dedupe_insert(result.points, x);
    }
    return result;
}

}  // namespace gradmetric
