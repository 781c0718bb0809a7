#pragma once

#include "gradmetric/tensor.hpp"

namespace gradmetric {

/// Order-N tensor equation:  sum_i U_{c_i b} T^{a b}_{c_1..^c_i..c_N} = R^a_{c_1..c_N}
/// with U an invertible bilinear form and R one-up/N-down, symmetric in its
/// lower indices.
struct TensorEquation {
    int order;
    Bilinear U;
    MultiTensor R;

    /// Validates the order, symmetrizes R over its lower group and checks
    /// that U is invertible.
    static TensorEquation make(int order, Bilinear u, MultiTensor r,
                               double cond_bound = 1e12);
};

/// Closed-form solution of the order-2 equation
///   U_{db} T^{ab}_c + U_{cb} T^{ab}_d = R^a_{cd}.
/// R must be one-up/two-down with a symmetric lower pair; the result is
/// two-up (symmetric) / one-down.
MultiTensor solve_order2(const Bilinear& u, const MultiTensor& r);

/// Closed-form solution of the general order-N equation; the result is
/// two-up (symmetric) / (N-1)-down (symmetric).  The returned entries lie in
/// the symmetric subspace exactly: values are computed once per orbit
/// representative and broadcast.
MultiTensor solve_order_n(const Bilinear& u, const MultiTensor& r, int order);
MultiTensor solve_order_n(const TensorEquation& eq);

/// Sup-norm of  sum_i U_{c_i b} T^{ab}_{..^c_i..} - R.
double equation_residual(const Bilinear& u, const MultiTensor& t,
                         const MultiTensor& r, int order);

/// Independent dense least-squares solution over the subspace of tensors
/// symmetric in the upper pair and the lower group.  Comparison with the
/// closed form is by residual; the equation admits many solutions.
MultiTensor brute_force_solve(const TensorEquation& eq, std::size_t max_unknowns = 5000);

/// max(1, |R|_sup, |U|_sup * |T|_sup): the scale entering residual tolerances.
double residual_scale(const Bilinear& u, const MultiTensor& t, const MultiTensor& r);

}  // namespace gradmetric
