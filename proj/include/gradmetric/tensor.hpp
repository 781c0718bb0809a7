#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gradmetric/errors.hpp"

namespace gradmetric {

/// Dense real tensor with k upper and l lower indices over dimension n.
/// Storage is row-major over [upper..., lower...]; immutable use after
/// construction is the intended pattern.
class MultiTensor {
public:
    MultiTensor(int dim, int upper_rank, int lower_rank);

    int dim() const { return dim_; }
    int upper_rank() const { return upper_; }
    int lower_rank() const { return lower_; }
    int rank() const { return upper_ + lower_; }
    std::size_t size() const { return entries_.size(); }

    double operator[](std::size_t flat) const { return entries_[flat]; }
    double& operator[](std::size_t flat) { return entries_[flat]; }

    std::size_t flat(std::span<const int> idx) const;
    double at(std::span<const int> idx) const { return entries_[flat(idx)]; }
    double& at(std::span<const int> idx) { return entries_[flat(idx)]; }

    const std::vector<double>& entries() const { return entries_; }
    std::vector<double>& entries() { return entries_; }

    /// Index positions (into 0..rank-1) declared permutation-invariant.
    const std::vector<std::vector<int>>& sym_groups() const { return sym_groups_; }
    void declare_symmetric(std::vector<int> group);

    /// True if position refers to an upper index.
    bool is_upper(int pos) const { return pos < upper_; }

private:
    int dim_, upper_, lower_;
    std::vector<double> entries_;
    std::vector<std::vector<int>> sym_groups_;
};

/// Max over coordinate entries of |entry|.
double sup_norm(const MultiTensor& t);

/// Average over all permutations of the given index positions.  All positions
/// must share a variance.  Exact fixed point: if the orbit of an entry already
/// holds one value, that value is returned untouched, so the operation is
/// idempotent entry-for-entry.
MultiTensor symmetrize(const MultiTensor& t, const std::vector<int>& group);

/// Einstein contraction of `a` with `b` over the listed (position-in-a,
/// position-in-b) pairs.  Each pair must join one upper and one lower index of
/// equal dimension.  Free indices of the result are ordered a-upper, b-upper,
/// a-lower, b-lower, each block keeping its original order.
MultiTensor contract(const MultiTensor& a, const MultiTensor& b,
                     const std::vector<std::pair<int, int>>& pairs);

/// General bilinear form (not necessarily symmetric); entries(i,j) with the
/// first index as the row.
struct Bilinear {
    Eigen::MatrixXd entries;
    int dim() const { return static_cast<int>(entries.rows()); }
};

/// Inverse form; throws DegenerateForm when cond exceeds the bound.
Bilinear invert_bilinear(const Bilinear& u, double cond_bound = 1e12);

/// Condition number (spectral) used by the degeneracy threshold.
double condition_number(const Eigen::MatrixXd& m);

/// Wrap a matrix as a rank-2 MultiTensor; upper_rank in {0,1,2}, first index
/// is the row.  upper_rank==1 means (upper, lower).
MultiTensor tensor_from_matrix(const Eigen::MatrixXd& m, int upper_rank);

/// Wrap a vector as a rank-1 tensor (upper when `upper`, else lower).
MultiTensor tensor_from_vector(const Eigen::VectorXd& v, bool upper);

}  // namespace gradmetric
