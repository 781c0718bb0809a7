#pragma once

#include <span>
#include <vector>

namespace gradmetric {

/// Exponent vector of a monomial; one entry per axis.
using MultiIndex = std::vector<int>;

int degree(const MultiIndex& m);

double factorial(int k);

/// m! = prod_i m_i!
double multi_factorial(const MultiIndex& m);

/// Canonical coefficient order used everywhere: ascending total degree,
/// ties broken by ascending lexicographic comparison of the exponent vector.
struct GradedLexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const;
};

/// All multi-indices of the given total degree, in canonical order.
std::vector<MultiIndex> multi_indices_of_degree(int dim, int deg);

/// All multi-indices with total degree <= max_deg, in canonical order.
std::vector<MultiIndex> multi_indices_up_to(int dim, int max_deg);

/// Multiset of axis labels {c_1..c_N} -> exponent vector.
MultiIndex tuple_to_multi(int dim, std::span<const int> tuple);

/// Exponent vector -> non-decreasing axis tuple (c_1 <= ... <= c_N).
std::vector<int> multi_to_tuple(const MultiIndex& m);

/// Non-decreasing tuples of the given length over {0..dim-1}
/// (combinations with replacement), in lexicographic order.
std::vector<std::vector<int>> sorted_tuples(int dim, int length);

}  // namespace gradmetric
