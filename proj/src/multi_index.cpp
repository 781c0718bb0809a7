#include "gradmetric/multi_index.hpp"

#include <algorithm>
#include <numeric>

namespace gradmetric {

int degree(const MultiIndex& m) {
    return std::accumulate(m.begin(), m.end(), 0);
}

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

double multi_factorial(const MultiIndex& m) {
    double f = 1.0;
    for (int e : m) f *= factorial(e);
    return f;
}

bool GradedLexLess::operator()(const MultiIndex& a, const MultiIndex& b) const {
    const int da = degree(a), db = degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

namespace {
void enumerate_degree(int dim, int deg, int axis, MultiIndex& cur,
                      std::vector<MultiIndex>& out) {
    if (axis == dim - 1) {
        cur[axis] = deg;
        out.push_back(cur);
        return;
    }
    for (int e = 0; e <= deg; ++e) {
        cur[axis] = e;
        enumerate_degree(dim, deg - e, axis + 1, cur, out);
    }
}
}  // namespace

std::vector<MultiIndex> multi_indices_of_degree(int dim, int deg) {
    std::vector<MultiIndex> out;
    MultiIndex cur(dim, 0);
    if (dim == 0) return out;
    enumerate_degree(dim, deg, 0, cur, out);
    return out;
}

std::vector<MultiIndex> multi_indices_up_to(int dim, int max_deg) {
    std::vector<MultiIndex> out;
    for (int d = 0; d <= max_deg; ++d) {
        auto level = multi_indices_of_degree(dim, d);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

MultiIndex tuple_to_multi(int dim, std::span<const int> tuple) {
    MultiIndex m(dim, 0);
    for (int c : tuple) ++m[c];
    return m;
}

std::vector<int> multi_to_tuple(const MultiIndex& m) {
    std::vector<int> t;
    for (int i = 0; i < static_cast<int>(m.size()); ++i)
        t.insert(t.end(), m[i], i);
    return t;
}

std::vector<std::vector<int>> sorted_tuples(int dim, int length) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(length, 0);
    if (length == 0) {
        out.push_back({});
        return out;
    }
    while (true) {
        out.push_back(cur);
        int i = length - 1;
        while (i >= 0 && cur[i] == dim - 1) --i;
        if (i < 0) break;
        const int v = cur[i] + 1;
        for (int j = i; j < length; ++j) cur[j] = v;
    }
    return out;
}

}  // namespace gradmetric
