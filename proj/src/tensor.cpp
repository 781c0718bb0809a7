#include "gradmetric/tensor.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>

namespace gradmetric {

MultiTensor::MultiTensor(int dim, int upper_rank, int lower_rank)
    : dim_(dim), upper_(upper_rank), lower_(lower_rank) {
    if (dim <= 0 || upper_rank < 0 || lower_rank < 0)
        throw Error("MultiTensor: invalid shape");
    std::size_t sz = 1;
    for (int i = 0; i < rank(); ++i) sz *= static_cast<std::size_t>(dim);
    entries_.assign(sz, 0.0);
}

std::size_t MultiTensor::flat(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int i = 0; i < rank(); ++i) f = f * dim_ + static_cast<std::size_t>(idx[i]);
    return f;
}

void MultiTensor::declare_symmetric(std::vector<int> group) {
    sym_groups_.push_back(std::move(group));
}

double sup_norm(const MultiTensor& t) {
    double m = 0.0;
    for (double v : t.entries()) m = std::max(m, std::abs(v));
    return m;
}

MultiTensor symmetrize(const MultiTensor& t, const std::vector<int>& group) {
    if (group.empty()) return t;
    const bool first_upper = t.is_upper(group.front());
    for (int pos : group) {
        if (pos < 0 || pos >= t.rank())
            throw InvalidIndexGroup("symmetrize: index position out of range");
        if (t.is_upper(pos) != first_upper)
            throw InvalidIndexGroup("symmetrize: mixed-variance index group");
    }
    MultiTensor out = t;
    out.declare_symmetric(group);
    const int r = t.rank();
    const int n = t.dim();
    std::vector<int> idx(r, 0), perm_idx(r, 0), gvals(group.size());
    const std::size_t total = t.size();
    for (std::size_t f = 0; f < total; ++f) {
        // decode
        std::size_t rem = f;
        for (int i = r - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(rem % n);
            rem /= n;
        }
        // only evaluate at orbit representatives (group values non-decreasing)
        bool rep = true;
        for (std::size_t g = 0; g + 1 < group.size(); ++g)
            if (idx[group[g]] > idx[group[g + 1]]) { rep = false; break; }
        if (!rep) continue;
        for (std::size_t g = 0; g < group.size(); ++g) gvals[g] = idx[group[g]];
        // average over all permutations of the group slots, in lexicographic
        // permutation order; short-circuit when every orbit value is equal
        perm_idx = idx;
        double sum = 0.0;
        std::size_t count = 0;
        bool all_equal = true;
        double first_val = 0.0;
        std::vector<int> slot(group.size());
        for (std::size_t g = 0; g < group.size(); ++g) slot[g] = static_cast<int>(g);
        std::sort(slot.begin(), slot.end());
        do {
            for (std::size_t g = 0; g < group.size(); ++g)
                perm_idx[group[g]] = gvals[slot[g]];
            const double v = t.at(perm_idx);
            if (count == 0) first_val = v;
            else if (v != first_val) all_equal = false;
            sum += v;
            ++count;
        } while (std::next_permutation(slot.begin(), slot.end()));
        const double avg = all_equal ? first_val : sum / static_cast<double>(count);
        // broadcast to the whole orbit
        std::sort(slot.begin(), slot.end());
        do {
            for (std::size_t g = 0; g < group.size(); ++g)
                perm_idx[group[g]] = gvals[slot[g]];
            out.at(perm_idx) = avg;
        } while (std::next_permutation(slot.begin(), slot.end()));
    }
    return out;
}

MultiTensor contract(const MultiTensor& a, const MultiTensor& b,
                     const std::vector<std::pair<int, int>>& pairs) {
    if (a.dim() != b.dim())
        throw InvalidContraction("contract: dimension mismatch");
    const int n = a.dim();
    std::vector<bool> a_bound(a.rank(), false), b_bound(b.rank(), false);
    for (auto [pa, pb] : pairs) {
        if (pa < 0 || pa >= a.rank() || pb < 0 || pb >= b.rank())
            throw InvalidContraction("contract: pair position out of range");
        if (a_bound[pa] || b_bound[pb])
            throw InvalidContraction("contract: repeated index position");
        if (a.is_upper(pa) == b.is_upper(pb))
            throw InvalidContraction("contract: pair must join one upper and one lower index");
        a_bound[pa] = true;
        b_bound[pb] = true;
    }
    // result layout: a-upper free, b-upper free, a-lower free, b-lower free
    std::vector<int> free_a_up, free_b_up, free_a_lo, free_b_lo;
    for (int i = 0; i < a.rank(); ++i)
        if (!a_bound[i]) (a.is_upper(i) ? free_a_up : free_a_lo).push_back(i);
    for (int i = 0; i < b.rank(); ++i)
        if (!b_bound[i]) (b.is_upper(i) ? free_b_up : free_b_lo).push_back(i);

    const int up = static_cast<int>(free_a_up.size() + free_b_up.size());
    const int lo = static_cast<int>(free_a_lo.size() + free_b_lo.size());
    MultiTensor out(n, up, lo);

    std::vector<int> out_idx(out.rank(), 0), ai(a.rank(), 0), bi(b.rank(), 0);
    const std::size_t total = out.size();
    std::size_t ncontr = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) ncontr *= static_cast<std::size_t>(n);

    for (std::size_t f = 0; f < total; ++f) {
        std::size_t rem = f;
        for (int i = out.rank() - 1; i >= 0; --i) {
            out_idx[i] = static_cast<int>(rem % n);
            rem /= n;
        }
        int pos = 0;
        for (int p : free_a_up) ai[p] = out_idx[pos++];
        for (int p : free_b_up) bi[p] = out_idx[pos++];
        for (int p : free_a_lo) ai[p] = out_idx[pos++];
        for (int p : free_b_lo) bi[p] = out_idx[pos++];
        double acc = 0.0;
        for (std::size_t c = 0; c < ncontr; ++c) {
            std::size_t crem = c;
            for (std::size_t k = pairs.size(); k-- > 0;) {
                const int v = static_cast<int>(crem % n);
                crem /= n;
                ai[pairs[k].first] = v;
                bi[pairs[k].second] = v;
            }
            acc += a.at(ai) * b.at(bi);
        }
        out[f] = acc;
    }
    return out;
}

double condition_number(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

Bilinear invert_bilinear(const Bilinear& u, double cond_bound) {
    if (u.entries.rows() != u.entries.cols())
        throw DegenerateForm("invert_bilinear: form is not square");
    const double cond = condition_number(u.entries);
    if (!std::isfinite(cond) || cond > cond_bound)
        throw DegenerateForm("invert_bilinear: condition number " + std::to_string(cond) +
                             " exceeds bound; form is degenerate");
    return Bilinear{u.entries.fullPivLu().inverse()};
}

MultiTensor tensor_from_matrix(const Eigen::MatrixXd& m, int upper_rank) {
    if (m.rows() != m.cols()) throw Error("tensor_from_matrix: matrix must be square");
    if (upper_rank < 0 || upper_rank > 2) throw Error("tensor_from_matrix: upper_rank in 0..2");
    const int n = static_cast<int>(m.rows());
    MultiTensor t(n, upper_rank, 2 - upper_rank);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            t[static_cast<std::size_t>(i) * n + j] = m(i, j);
    return t;
}

MultiTensor tensor_from_vector(const Eigen::VectorXd& v, bool upper) {
    const int n = static_cast<int>(v.size());
    MultiTensor t(n, upper ? 1 : 0, upper ? 0 : 1);
    for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = v(i);
    return t;
}

}  // namespace gradmetric
