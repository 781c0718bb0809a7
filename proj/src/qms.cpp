#include "gradmetric/qms.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace gradmetric::qms {

namespace {

using Cplx = std::complex<double>;

CVec vec_rm(const CMat& a) {
    const int d = static_cast<int>(a.rows());
    CVec v(d * d);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) v(j * d + k) = a(j, k);
    return v;
}

CMat unvec_rm(const CVec& v, int d) {
    CMat a(d, d);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) a(j, k) = v(j * d + k);
    return a;
}

double sup_entry(const CMat& a) { return a.cwiseAbs().maxCoeff(); }

CMat matrix_log(const CMat& hermitian) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian);
    const Eigen::VectorXd lam = es.eigenvalues();
    Eigen::VectorXd loglam(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) loglam(i) = std::log(lam(i));
    return es.eigenvectors() * loglam.asDiagonal().toDenseMatrix().cast<Cplx>() *
           es.eigenvectors().adjoint();
}

double logarithmic_mean(double a, double b) {
    const double la = std::log(a), lb = std::log(b);
    if (std::abs(la - lb) < 1e-8) {
        // short series in delta = b/a - 1 avoids the cancelling quotient
        const double delta = b / a - 1.0;
        return a * (1.0 + 0.5 * delta - delta * delta / 12.0);
    }
    return (a - b) / (la - lb);
}

}  // namespace

DensityMatrix make_density(const CMat& rho, double min_eig) {
    const int d = static_cast<int>(rho.rows());
    if (rho.cols() != d) throw Error("density matrix must be square");
    if (sup_entry(rho - rho.adjoint()) > 1e-12)
        throw SingularState("density matrix is not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > 1e-12 || std::abs(rho.trace().imag()) > 1e-12)
        throw SingularState("density matrix trace differs from one");
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (rho + rho.adjoint()));
    const double lo = es.eigenvalues().minCoeff();
    if (lo < -1e-12) throw SingularState("density matrix has a negative eigenvalue");
    if (min_eig > 0.0 && lo < min_eig)
        throw SingularState("density matrix is not strictly positive (min eigenvalue " +
                            std::to_string(lo) + ")");
    return DensityMatrix{d, rho};
}

CMat apply_superop(const CMat& superop, const CMat& a) {
    const int d = static_cast<int>(a.rows());
    return unvec_rm(superop * vec_rm(a), d);
}

LindbladGenerator lindblad_superoperator(const CMat& H, const std::vector<CMat>& jumps) {
    const int d = static_cast<int>(H.rows());
    if (H.cols() != d) throw InvalidHamiltonian("Hamiltonian must be square");
    if (sup_entry(H - H.adjoint()) > 1e-12 * std::max(1.0, sup_entry(H)))
        throw InvalidHamiltonian("Hamiltonian must be Hermitian");
    for (const auto& l : jumps)
        if (l.rows() != d || l.cols() != d)
            throw Error("jump operator dimension mismatch");

    LindbladGenerator gen;
    gen.d = d;
    gen.H = H;
    gen.jumps = jumps;
    // precompute sum L_k* L_k
    CMat acc = CMat::Zero(d, d);
    for (const auto& l : jumps) acc += l.adjoint() * l;
    gen.superop_dagger = CMat::Zero(d * d, d * d);
    const Cplx iunit(0.0, 1.0);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            CMat e = CMat::Zero(d, d);
            e(j, k) = 1.0;
            CMat out = -iunit * (H * e - e * H) - 0.5 * (acc * e + e * acc);
            for (const auto& l : jumps) out += l * e * l.adjoint();
            gen.superop_dagger.col(j * d + k) = vec_rm(out);
        }
    gen.superop = gen.superop_dagger.adjoint();
    return gen;
}

DensityMatrix stationary_state(const LindbladGenerator& gen, double ergodicity_ratio) {
    Eigen::JacobiSVD<CMat> svd(gen.superop_dagger, Eigen::ComputeFullV);
    const Eigen::VectorXd s = svd.singularValues();
    const Eigen::Index last = s.size() - 1;
    if (s(0) <= 0.0) throw NotErgodic("stationary_state: zero generator");
    if (last >= 1 && s(last) > ergodicity_ratio * s(last - 1))
        throw NotErgodic("stationary_state: kernel is not one-dimensional "
                         "(singular value ratio " +
                         std::to_string(s(last) / s(last - 1)) + ")");
    CMat v = unvec_rm(svd.matrixV().col(last), gen.d);
    v = 0.5 * (v + v.adjoint()).eval();
    const double tr = v.trace().real();
    if (std::abs(tr) < 1e-10 * v.norm())
        throw SingularState("stationary_state: kernel element is traceless");
    v /= tr;
    Eigen::SelfAdjointEigenSolver<CMat> es(v);
    if (es.eigenvalues().minCoeff() <= 1e-12)
        throw SingularState("stationary_state: stationary state is not strictly positive");
    return DensityMatrix{gen.d, v};
}

BKMForm make_bkm_form(const DensityMatrix& sigma) {
    make_density(sigma.rho, 1e-12);
    BKMForm form;
    form.sigma = sigma;
    Eigen::SelfAdjointEigenSolver<CMat> es(sigma.rho);
    form.eigenvalues = es.eigenvalues();
    form.eigenvectors = es.eigenvectors();
    const int d = sigma.d;
    form.W.resize(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            form.W(i, j) = i == j ? form.eigenvalues(i)
                                  : logarithmic_mean(form.eigenvalues(i),
                                                     form.eigenvalues(j));
    return form;
}

CMat bkm_apply(const BKMForm& form, const CMat& b) {
    const CMat bt = form.eigenvectors.adjoint() * b * form.eigenvectors;
    return form.eigenvectors * (form.W.cast<Cplx>().cwiseProduct(bt)) *
           form.eigenvectors.adjoint();
}

CMat bkm_inv_apply(const BKMForm& form, const CMat& b) {
    const CMat bt = form.eigenvectors.adjoint() * b * form.eigenvectors;
    return form.eigenvectors * bt.cwiseQuotient(form.W.cast<Cplx>()) *
           form.eigenvectors.adjoint();
}

CMat bkm_superop_matrix(const BKMForm& form, bool inverse) {
    const int d = form.sigma.d;
    CMat m(d * d, d * d);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            CMat e = CMat::Zero(d, d);
            e(j, k) = 1.0;
            m.col(j * d + k) = vec_rm(inverse ? bkm_inv_apply(form, e) : bkm_apply(form, e));
        }
    return m;
}

std::pair<bool, double> check_bkm_detailed_balance(const LindbladGenerator& gen,
                                                   const DensityMatrix& sigma,
                                                   double tol) {
    const BKMForm form = make_bkm_form(sigma);
    const CMat m = bkm_superop_matrix(form);
    const double defect = sup_entry(m * gen.superop - gen.superop_dagger * m);
    const double scale = std::max(sup_entry(gen.superop), 1e-300);
    return {defect <= tol * scale, defect};
}

double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
    make_density(rho.rho, 1e-12);
    make_density(sigma.rho, 1e-12);
    const CMat diff = matrix_log(rho.rho) - matrix_log(sigma.rho);
    return (rho.rho * diff).trace().real();
}

double entropy_production(const DensityMatrix& rho, const DensityMatrix& sigma,
                          const LindbladGenerator& gen) {
    make_density(rho.rho, 1e-12);
    make_density(sigma.rho, 1e-12);
    const CMat diff = matrix_log(rho.rho) - matrix_log(sigma.rho);
    const CMat flow = apply_superop(gen.superop_dagger, rho.rho);
    return -(diff * flow).trace().real();
}

namespace {
void require_tangent(const CMat& a, const char* who) {
    const double scale = 1.0 + a.cwiseAbs().maxCoeff();
    if (sup_entry(a - a.adjoint()) > 1e-10 * scale ||
        std::abs(a.trace()) > 1e-10 * scale)
        throw NotTangent(std::string(who) +
                         ": argument is not traceless Hermitian");
}
}  // namespace

double hessian_form(const BKMForm& form, const CMat& a, const CMat& b) {
    require_tangent(a, "hessian_form");
    require_tangent(b, "hessian_form");
    return (a * bkm_inv_apply(form, b)).trace().real();
}

HessianCheck entropy_production_hessian_check(const DensityMatrix& sigma,
                                              const LindbladGenerator& gen,
                                              const CMat& a, double eps) {
    require_tangent(a, "entropy_production_hessian_check");
    HessianCheck out;
    if (a.norm() == 0.0) return out;
    Eigen::SelfAdjointEigenSolver<CMat> es(sigma.rho);
    const double lam_min = es.eigenvalues().minCoeff();
    const double anorm = std::sqrt(a.squaredNorm());
    if (eps <= 0.0) eps = std::min(1e-4 / std::max(anorm, 1e-12), 0.25 * lam_min / anorm);
    Eigen::SelfAdjointEigenSolver<CMat> ep(sigma.rho + eps * a);
    Eigen::SelfAdjointEigenSolver<CMat> em(sigma.rho - eps * a);
    if (ep.eigenvalues().minCoeff() <= 1e-3 * lam_min ||
        em.eigenvalues().minCoeff() <= 1e-3 * lam_min)
        throw StepTooLarge("entropy_production_hessian_check: sigma +- eps A leaves "
                           "the strictly positive cone");
    const DensityMatrix rp = make_density(sigma.rho + eps * a, 0.0);
    const DensityMatrix rm = make_density(sigma.rho - eps * a, 0.0);
    const double ip = entropy_production(rp, sigma, gen);
    const double im = entropy_production(rm, sigma, gen);
    const double i0 = entropy_production(sigma, sigma, gen);
    out.lhs = (ip - 2.0 * i0 + im) / (eps * eps);
    const BKMForm form = make_bkm_form(sigma);
    const CMat la = apply_superop(gen.superop_dagger, a);
    out.rhs = -2.0 * (a * bkm_inv_apply(form, la)).trace().real();
    out.gap = std::abs(out.lhs - out.rhs);
    return out;
}

std::vector<CMat> gellmann_basis(int d) {
    std::vector<CMat> basis;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
            CMat re = CMat::Zero(d, d);
            re(j, k) = re(k, j) = inv_sqrt2;
            basis.push_back(re);
            CMat im = CMat::Zero(d, d);
            im(j, k) = Cplx(0.0, -inv_sqrt2);
            im(k, j) = Cplx(0.0, inv_sqrt2);
            basis.push_back(im);
        }
    for (int l = 1; l < d; ++l) {
        CMat e = CMat::Zero(d, d);
        for (int j = 0; j < l; ++j) e(j, j) = 1.0;
        e(l, l) = -double(l);
        basis.push_back(e / std::sqrt(double(l) * (l + 1)));
    }
    return basis;
}

GradientStructureReport check_gradient_structure(const LindbladGenerator& gen,
                                                 int samples, unsigned seed,
                                                 const GradientTolerances& tols) {
    GradientStructureReport rep;
    const DensityMatrix sigma = stationary_state(gen);
    const int d = gen.d;

    auto [bkm_ok, bkm_defect] = check_bkm_detailed_balance(gen, sigma, tols.bkm_tol);
    rep.bkm_defect = bkm_defect;
    rep.bkm_pass = bkm_ok;

    rep.cond_ii_defect = sup_entry(apply_superop(gen.superop_dagger, sigma.rho));
    rep.cond_ii_pass = rep.cond_ii_defect <= tols.stationarity_tol;

    // sampled strict positivity of the entropy production
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    rep.cond_i_min_production = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd lam(d);
        for (int i = 0; i < d; ++i) lam(i) = std::max(expo(rng), tols.eigen_floor);
        lam /= lam.sum();
        for (int i = 0; i < d; ++i) lam(i) = std::max(lam(i), tols.eigen_floor);
        lam /= lam.sum();
        CMat z(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) z(i, j) = Cplx(gauss(rng), gauss(rng));
        const Eigen::HouseholderQR<CMat> qr(z);
        CMat q = qr.householderQ();
        const CMat rho = q * lam.asDiagonal().toDenseMatrix().cast<Cplx>() * q.adjoint();
        const DensityMatrix dm = make_density(0.5 * (rho + rho.adjoint()), 0.0);
        if (sup_entry(dm.rho - sigma.rho) < 1e-12) continue;
        const double prod = entropy_production(dm, sigma, gen);
        rep.cond_i_min_production = std::min(rep.cond_i_min_production, prod);
        if (prod <= tols.production_tol) rep.cond_i_violations.push_back(s);
    }
    rep.cond_i_pass = rep.cond_i_violations.empty();

    // matrix of -L^dagger on the tangent space in an h-orthonormal basis
    const BKMForm form = make_bkm_form(sigma);
    const auto basis = gellmann_basis(d);
    const int m = static_cast<int>(basis.size());
    Eigen::MatrixXd h(m, m), flow(m, m);
    for (int j = 0; j < m; ++j) {
        const CMat lb = apply_superop(gen.superop_dagger, basis[j]);
        const CMat mb = bkm_inv_apply(form, basis[j]);
        for (int i = 0; i < m; ++i) {
            flow(i, j) = -(basis[i] * lb).trace().real();
            h(i, j) = (basis[i] * mb).trace().real();
        }
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (h + h.transpose()));
    if (llt.info() != Eigen::Success)
        throw SingularState("check_gradient_structure: Hessian form is not positive");
    const Eigen::MatrixXd l = llt.matrixL();
    // basis change to h-orthonormal coordinates: M' = L^T M L^{-T}
    const Eigen::MatrixXd mprime =
        l.transpose() * flow * l.transpose().triangularView<Eigen::Upper>().solve(
                                   Eigen::MatrixXd::Identity(m, m));
    rep.cond_iii_symmetry_defect = (mprime - mprime.transpose()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (mprime + mprime.transpose()));
    rep.cond_iii_min_eigenvalue = es.eigenvalues().minCoeff();
    const double mscale = std::max(mprime.cwiseAbs().maxCoeff(), 1e-300);
    rep.cond_iii_pass = rep.cond_iii_symmetry_defect <= tols.symmetry_tol * mscale &&
                        rep.cond_iii_min_eigenvalue > tols.positivity_eig_tol;

    rep.verdict = rep.cond_i_pass && rep.cond_ii_pass && rep.cond_iii_pass;
    return rep;
}

namespace {

/// Memoised int_0^infty prod_r (t + mu_{i_r})^{-1} dt over eigenvalue index
/// tuples, via the substitution u = 1/(1+t) and composite Gauss-Legendre.
class ResolventChainIntegrals {
public:
    ResolventChainIntegrals(Eigen::VectorXd eigenvalues, int panels = 96, int nodes = 12)
        : lam_(std::move(eigenvalues)) {
        // Gauss-Legendre nodes on [0,1] per panel
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(nodes, nodes);
        for (int i = 1; i < nodes; ++i) {
            const double b = i / std::sqrt(4.0 * i * i - 1.0);
            j(i, i - 1) = j(i - 1, i) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
        for (int p = 0; p < panels; ++p) {
            const double a = double(p) / panels, b = double(p + 1) / panels;
            for (int i = 0; i < nodes; ++i) {
                const double x = es.eigenvalues()(i);  // node on [-1, 1]
                u_.push_back(0.5 * (a + b) + 0.5 * (b - a) * x);
                w_.push_back((b - a) * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
            }
        }
    }

    double value(std::vector<int> tuple) {
        std::sort(tuple.begin(), tuple.end());
        auto it = cache_.find(tuple);
        if (it != cache_.end()) return it->second;
        // I = int_0^1 u^{p-1} / prod_r ((1-u) + u mu_r) du for p+1 nodes
        const int p = static_cast<int>(tuple.size()) - 1;
        double total = 0.0;
        for (std::size_t q = 0; q < u_.size(); ++q) {
            const double u = u_[q];
            double den = 1.0;
            for (int idx : tuple) den *= (1.0 - u) + u * lam_(idx);
            double num = w_[q];
            for (int k = 0; k < p - 1; ++k) num *= u;
            total += num / den;
        }
        cache_.emplace(std::move(tuple), total);
        return total;
    }

private:
    Eigen::VectorXd lam_;
    std::vector<double> u_, w_;
    std::map<std::vector<int>, double> cache_;
};

}  // namespace

SimplexMetricResult build_simplex_metric(const LindbladGenerator& gen, int order,
                                         const SeriesOptions& opts) {
    const int d = gen.d;
    const DensityMatrix sigma = stationary_state(gen);
    const BKMForm form = make_bkm_form(sigma);
    const auto basis = gellmann_basis(d);
    const int m = static_cast<int>(basis.size());
    const int jet_order = order + 1;

    // entropy-gradient jets: Y_j(theta) = Tr[(log(sigma + theta.F) - log sigma) F_j]
    // expands into chain sums over resolvent integrals in sigma's eigenbasis
    std::vector<CMat> ft;
    for (const auto& f : basis)
        ft.push_back(form.eigenvectors.adjoint() * f * form.eigenvectors);
    ResolventChainIntegrals integrals(form.eigenvalues);

    const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(m);
    FieldPair fp;
    fp.dim = m;
    const double lam_min = form.eigenvalues.minCoeff();
    fp.domain = Box{Eigen::VectorXd::Constant(m, -0.5 * lam_min),
                    Eigen::VectorXd::Constant(m, 0.5 * lam_min)};
    std::vector<Jet> yjets(static_cast<std::size_t>(m), Jet(m, jet_order, theta0));

    std::vector<int> chain;
    for (int p = 1; p <= jet_order; ++p) {
        for (const auto& ks : sorted_tuples(m, p)) {
            // sum over distinct arrangements of the multiset; each ordered
            // tuple contributes its own chain sum
            std::vector<int> arrangement = ks;
            const MultiIndex mono = tuple_to_multi(m, ks);
            std::vector<double> totals(static_cast<std::size_t>(m), 0.0);
            do {
                // chains i_0 -> i_1 -> .. -> i_p -> i_0 through the matrices
                // F_j, F_{k_1}, .., F_{k_p}
                const std::size_t nchains = [&] {
                    std::size_t c = 1;
                    for (int r = 0; r <= p; ++r) c *= static_cast<std::size_t>(d);
                    return c;
                }();
                for (std::size_t cidx = 0; cidx < nchains; ++cidx) {
                    chain.assign(static_cast<std::size_t>(p + 1), 0);
                    std::size_t rem = cidx;
                    for (int r = p; r >= 0; --r) {
                        chain[static_cast<std::size_t>(r)] = static_cast<int>(rem % d);
                        rem /= d;
                    }
                    Cplx prod(1.0, 0.0);
                    for (int r = 0; r < p; ++r) {
                        prod *= ft[static_cast<std::size_t>(arrangement[r])](
                            chain[static_cast<std::size_t>(r + 1)],
                            chain[static_cast<std::size_t>((r + 2) % (p + 1))]);
                        if (prod == Cplx(0.0, 0.0)) break;
                    }
                    if (prod == Cplx(0.0, 0.0)) continue;
                    const double ival = integrals.value(chain);
                    for (int j = 0; j < m; ++j) {
                        const Cplx full = ft[static_cast<std::size_t>(j)](chain[0], chain[1]) * prod;
                        totals[static_cast<std::size_t>(j)] += full.real() * ival;
                    }
                }
            } while (std::next_permutation(arrangement.begin(), arrangement.end()));
            for (int j = 0; j < m; ++j)
                if (totals[static_cast<std::size_t>(j)] != 0.0)
                    yjets[static_cast<std::size_t>(j)].set_coeff(
                        mono, totals[static_cast<std::size_t>(j)]);
        }
    }

    // flow field in coordinates, negated so the pairing with the entropy
    // gradient is positive for the descending dynamics; this is the single
    // sign site of the bridge
    Eigen::MatrixXd flow(m, m);
    Eigen::VectorXd flow0(m);
    for (int l = 0; l < m; ++l) {
        const CMat lb = apply_superop(gen.superop_dagger, basis[l]);
        for (int kk = 0; kk < m; ++kk) flow(kk, l) = (basis[kk] * lb).trace().real();
    }
    const CMat lsig = apply_superop(gen.superop_dagger, sigma.rho);
    for (int kk = 0; kk < m; ++kk) flow0(kk) = (basis[kk] * lsig).trace().real();

    std::vector<Jet> xjets(static_cast<std::size_t>(m), Jet(m, jet_order, theta0));
    MultiIndex e(m, 0);
    for (int a = 0; a < m; ++a) {
        if (flow0(a) != 0.0) xjets[static_cast<std::size_t>(a)].set_coeff(MultiIndex(m, 0), -flow0(a));
        for (int c = 0; c < m; ++c) {
            if (flow(a, c) == 0.0) continue;
            std::fill(e.begin(), e.end(), 0);
            e[c] = 1;
            xjets[static_cast<std::size_t>(a)].set_coeff(e, -flow(a, c));
        }
    }
    fp.X = std::move(xjets);
    fp.Y = std::move(yjets);

    SimplexMetricResult result;
    result.fields = fp;
    result.basis = basis;
    result.flow = flow;
    Eigen::MatrixXd h(m, m);
    for (int j = 0; j < m; ++j) {
        const CMat mb = bkm_inv_apply(form, basis[j]);
        for (int i = 0; i < m; ++i) h(i, j) = (basis[i] * mb).trace().real();
    }
    result.hessian = h;
    // the base solve below reproduces exists == BKM detailed balance; the
    // asymmetry certificate corresponds to the superoperator defect
    Bilinear A{Eigen::MatrixXd(m, m)}, U{Eigen::MatrixXd(m, m)};
    for (int c = 0; c < m; ++c) {
        std::fill(e.begin(), e.end(), 0);
        e[c] = 1;
        for (int b = 0; b < m; ++b) {
            A.entries(c, b) = fp.X[b].derivative_at_base(e);
            U.entries(c, b) = fp.Y[b].derivative_at_base(e);
        }
    }
    result.base = solve_base_metric(A, U, opts.asym_tol, opts.eig_tol);
    if (!result.base.exists) throw ConditionThreeViolated(result.base);
    result.series = build_metric_series(fp, order, opts);
    result.verify_defect = verify_order(result.series, fp, order + 1);
    return result;
}

namespace {

double parse_real_token(const nlohmann::json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        const auto slash = s.find('/');
        try {
            if (slash == std::string::npos) return std::stod(s);
            return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
        } catch (const std::exception&) {
            throw SpecParseError("generator spec: cannot parse numeric token '" + s + "'");
        }
    }
    throw SpecParseError("generator spec: numeric entry must be a number or string");
}

Cplx parse_complex_entry(const nlohmann::json& v) {
    if (v.is_array()) {
        if (v.size() != 2)
            throw SpecParseError("generator spec: complex entry must be [re, im]");
        return Cplx(parse_real_token(v.at(0)), parse_real_token(v.at(1)));
    }
    return Cplx(parse_real_token(v), 0.0);
}

CMat parse_matrix(const nlohmann::json& rows, int d, const char* label) {
    if (!rows.is_array() || static_cast<int>(rows.size()) != d)
        throw SpecParseError(std::string("generator spec: ") + label + " must have " +
                             std::to_string(d) + " rows");
    CMat m(d, d);
    for (int i = 0; i < d; ++i) {
        if (!rows.at(i).is_array() || static_cast<int>(rows.at(i).size()) != d)
            throw SpecParseError(std::string("generator spec: ") + label +
                                 " row length mismatch");
        for (int j = 0; j < d; ++j) m(i, j) = parse_complex_entry(rows.at(i).at(j));
    }
    return m;
}

}  // namespace

LindbladGenerator parse_generator_spec(const nlohmann::json& doc) {
    try {
        const int d = doc.at("d").get<int>();
        if (d <= 0) throw SpecParseError("generator spec: d must be positive");
        const CMat h = parse_matrix(doc.at("H"), d, "H");
        std::vector<CMat> jumps;
        for (const auto& j : doc.at("jumps")) jumps.push_back(parse_matrix(j, d, "jump"));
        return lindblad_superoperator(h, jumps);
    } catch (const nlohmann::json::exception& e) {
        throw SpecParseError(std::string("generator spec: ") + e.what());
    }
}

LindbladGenerator load_generator_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecParseError("generator spec: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SpecParseError(std::string("generator spec: ") + e.what());
    }
    return parse_generator_spec(doc);
}

nlohmann::json serialize_generator_spec(const LindbladGenerator& gen) {
    auto dump_matrix = [](const CMat& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (int i = 0; i < m.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (int j = 0; j < m.cols(); ++j)
                row.push_back({m(i, j).real(), m(i, j).imag()});
            rows.push_back(std::move(row));
        }
        return rows;
    };
    nlohmann::json doc;
    doc["d"] = gen.d;
    doc["H"] = dump_matrix(gen.H);
    nlohmann::json jumps = nlohmann::json::array();
    for (const auto& l : gen.jumps) jumps.push_back(dump_matrix(l));
    doc["jumps"] = std::move(jumps);
    return doc;
}

nlohmann::json GradientStructureReport::to_json(const GradientTolerances& tols) const {
    nlohmann::json doc;
    doc["bkm_defect"] = bkm_defect;
    doc["bkm_pass"] = bkm_pass;
    doc["cond_i"] = {{"min_production", cond_i_min_production},
                     {"violations", cond_i_violations},
                     {"pass", cond_i_pass}};
    doc["cond_ii"] = {{"defect", cond_ii_defect}, {"pass", cond_ii_pass}};
    doc["cond_iii"] = {{"symmetry_defect", cond_iii_symmetry_defect},
                       {"min_eigenvalue", cond_iii_min_eigenvalue},
                       {"pass", cond_iii_pass}};
    doc["verdict"] = verdict;
    doc["tolerances"] = {{"bkm_tol", tols.bkm_tol},
                         {"stationarity_tol", tols.stationarity_tol},
                         {"symmetry_tol", tols.symmetry_tol},
                         {"positivity_eig_tol", tols.positivity_eig_tol},
                         {"production_tol", tols.production_tol},
                         {"eigen_floor", tols.eigen_floor}};
    return doc;
}

}  // namespace gradmetric::qms
