#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradmetric/critical.hpp"
#include "gradmetric/jet.hpp"

namespace gradmetric::qms {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct DensityMatrix {
    int d = 0;
    CMat rho;
};

/// Validate and wrap a density matrix (Hermitian within 1e-12, eigenvalues
/// >= -1e-12, unit trace within 1e-12); with min_eig > 0 the state must be
/// strictly positive or SingularState is thrown.
DensityMatrix make_density(const CMat& rho, double min_eig = 0.0);

/// GKSL generator in both pictures.  superop_dagger is the d^2 x d^2 matrix
/// of rho -> -i[H,rho] + sum_k (L_k rho L_k* - 1/2 {L_k* L_k, rho}) acting on
/// row-major vectorised matrices; superop is its trace-pairing adjoint (the
/// Heisenberg generator).
struct LindbladGenerator {
    int d = 0;
    CMat H;
    std::vector<CMat> jumps;
    CMat superop_dagger;
    CMat superop;
};

LindbladGenerator lindblad_superoperator(const CMat& H, const std::vector<CMat>& jumps);

/// Parse {d, H, jumps} with exact decimal/fraction entries.  A complex entry
/// is a number, a string ("0.25", "3/4"), or a [re, im] pair of those.
LindbladGenerator parse_generator_spec(const nlohmann::json& doc);
LindbladGenerator load_generator_spec(const std::string& path);
nlohmann::json serialize_generator_spec(const LindbladGenerator& gen);

CMat apply_superop(const CMat& superop, const CMat& a);

/// Unique stationary state of an ergodic generator; NotErgodic when the
/// kernel of superop_dagger is not one-dimensional (singular-value ratio
/// test), SingularState when the kernel element fails to be strictly
/// positive after trace normalisation.
DensityMatrix stationary_state(const LindbladGenerator& gen,
                               double ergodicity_ratio = 1e-8);

/// Spectral data of the weighting operator: W_ij is the logarithmic mean of
/// the eigenvalues (W_ii the limit value), with a short series for
/// near-degenerate pairs.
struct BKMForm {
    DensityMatrix sigma;
    Eigen::VectorXd eigenvalues;
    CMat eigenvectors;
    Eigen::MatrixXd W;
};

BKMForm make_bkm_form(const DensityMatrix& sigma);

/// Weighting operator int_0^1 sigma^{1-s} B sigma^s ds via eigenbasis weights.
CMat bkm_apply(const BKMForm& form, const CMat& b);

/// Its inverse, int_0^infty (t+sigma)^{-1} B (t+sigma)^{-1} dt.
CMat bkm_inv_apply(const BKMForm& form, const CMat& b);

/// d^2 x d^2 matrix of bkm_apply (or of the inverse) on vectorised matrices.
CMat bkm_superop_matrix(const BKMForm& form, bool inverse = false);

/// Detailed-balance test: defect = sup-entry norm of M L - L^dagger M as
/// d^2 x d^2 matrices; passes when defect <= tol * |L|_sup.
std::pair<bool, double> check_bkm_detailed_balance(const LindbladGenerator& gen,
                                                   const DensityMatrix& sigma,
                                                   double tol = 1e-8);

/// Tr[rho (log rho - log sigma)] for strictly positive arguments.
double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma);

/// I(rho) = -Tr[(log rho - log sigma) L^dagger rho].
double entropy_production(const DensityMatrix& rho, const DensityMatrix& sigma,
                          const LindbladGenerator& gen);

/// Hessian of the relative entropy at sigma: h(A,B) = Tr[A Minv(B)] on the
/// tangent space of traceless Hermitian matrices; NotTangent outside it.
double hessian_form(const BKMForm& form, const CMat& a, const CMat& b);

struct HessianCheck {
    double lhs = 0.0;  // central second difference of the entropy production
    double rhs = 0.0;  // 2 <A, Minv(-L^dagger A)>
    double gap = 0.0;
};

/// Second derivative of the entropy production at the stationary state along
/// a tangent direction, against its closed form.  eps <= 0 picks a step
/// automatically; StepTooLarge when sigma +- eps A leaves the positive cone.
HessianCheck entropy_production_hessian_check(const DensityMatrix& sigma,
                                              const LindbladGenerator& gen,
                                              const CMat& a, double eps = 0.0);

struct GradientTolerances {
    double bkm_tol = 1e-8;
    double stationarity_tol = 1e-10;
    double symmetry_tol = 1e-8;
    double positivity_eig_tol = 1e-10;
    double production_tol = 1e-12;
    double eigen_floor = 1e-3;  // sampled spectra are floored here
};

struct GradientStructureReport {
    double bkm_defect = 0.0;
    bool bkm_pass = false;
    double cond_i_min_production = 0.0;
    std::vector<int> cond_i_violations;  // sample indices with I <= tol
    bool cond_i_pass = false;
    double cond_ii_defect = 0.0;  // |L^dagger sigma|_sup
    bool cond_ii_pass = false;
    double cond_iii_symmetry_defect = 0.0;  // of -L^dagger in an h-orthonormal basis
    double cond_iii_min_eigenvalue = 0.0;
    bool cond_iii_pass = false;
    bool verdict = false;

    nlohmann::json to_json(const GradientTolerances& tols) const;
};

/// Check the three gradient-structure conditions at the stationary state and
/// the detailed-balance criterion; the verdict and the detailed-balance
/// boolean agree for ergodic generators.
GradientStructureReport check_gradient_structure(const LindbladGenerator& gen,
                                                 int samples = 200, unsigned seed = 0,
                                                 const GradientTolerances& tols = {});

/// Orthonormal traceless Hermitian basis of M_d (generalised Gell-Mann).
std::vector<CMat> gellmann_basis(int d);

struct SimplexMetricResult {
    MetricSeries series;
    FieldPair fields;       // coordinates on the tangent space, centered at sigma
    BaseMetricResult base;
    Eigen::MatrixXd hessian;      // h matrix in the basis
    Eigen::MatrixXd flow;         // matrix of L^dagger restricted to the basis
    double verify_defect = 0.0;
    std::vector<CMat> basis;
};

/// Bridge to the series constructor on the simplex interior: coordinates are
/// the Gell-Mann components of rho - sigma, the co-vector field is the
/// entropy gradient, and the vector field is the negated flow so that the
/// pairing condition holds for the descending dynamics.
SimplexMetricResult build_simplex_metric(const LindbladGenerator& gen, int order,
                                         const SeriesOptions& opts = {});

}  // namespace gradmetric::qms
