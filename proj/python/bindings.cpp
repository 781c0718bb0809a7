#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numeric>

#include "gradmetric/assembler.hpp"
#include "gradmetric/field_spec.hpp"
#include "gradmetric/qms.hpp"

namespace py = pybind11;
namespace gm = gradmetric;

namespace {

using DenseArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

gm::MultiTensor tensor_from_array(const DenseArray& arr, int upper_rank) {
    const auto buf = arr.request();
    if (buf.ndim < 1) throw gm::Error("tensor array must have at least one axis");
    const int n = static_cast<int>(buf.shape[0]);
    for (py::ssize_t i = 0; i < buf.ndim; ++i)
        if (buf.shape[i] != n) throw gm::Error("tensor array axes must share one dimension");
    gm::MultiTensor t(n, upper_rank, static_cast<int>(buf.ndim) - upper_rank);
    const double* data = static_cast<const double*>(buf.ptr);
    std::copy(data, data + t.size(), t.entries().begin());
    return t;
}

py::array_t<double> array_from_tensor(const gm::MultiTensor& t) {
    std::vector<py::ssize_t> shape(static_cast<std::size_t>(t.rank()),
                                   static_cast<py::ssize_t>(t.dim()));
    py::array_t<double> arr(shape);
    std::copy(t.entries().begin(), t.entries().end(), arr.mutable_data());
    return arr;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "metric construction for prescribed gradient data and quantum "
              "Markov semigroup gradient-structure checks";

    m.def("solve_order_n",
          [](const Eigen::MatrixXd& u, const DenseArray& r, int order) {
              gm::Bilinear ub{u};
              const auto eq = gm::TensorEquation::make(order, ub, tensor_from_array(r, 1));
              return array_from_tensor(gm::solve_order_n(eq));
          },
          py::arg("U"), py::arg("R"), py::arg("order"),
          "closed-form solution of the order-N tensor equation");

    m.def("equation_residual",
          [](const Eigen::MatrixXd& u, const DenseArray& t,
             const DenseArray& r, int order) {
              return gm::equation_residual(gm::Bilinear{u}, tensor_from_array(t, 2),
                                           tensor_from_array(r, 1), order);
          },
          py::arg("U"), py::arg("T"), py::arg("R"), py::arg("order"));

    m.def("brute_force_solve",
          [](const Eigen::MatrixXd& u, const DenseArray& r, int order) {
              const auto eq = gm::TensorEquation::make(order, gm::Bilinear{u},
                                                       tensor_from_array(r, 1));
              return array_from_tensor(gm::brute_force_solve(eq));
          },
          py::arg("U"), py::arg("R"), py::arg("order"),
          "least-squares oracle over the symmetric subspace");

    m.def("build_metric_series",
          [](const std::string& spec_json, int order) {
              const gm::FieldPair fp = gm::parse_field_spec_text(spec_json);
              const gm::MetricSeries ms = gm::build_metric_series(fp, order);
              const double defect = gm::verify_order(ms, fp, std::min(order + 1, fp.order()));
              py::dict out;
              out["series"] = ms.to_json().dump();
              out["verify_defect"] = defect;
              out["growth_p"] = ms.growth.p;
              out["growth_C"] = ms.growth.C;
              return out;
          },
          py::arg("field_spec_json"), py::arg("order"),
          "series coefficients at the field pair's critical base point");

    m.def("eval_metric_series",
          [](const std::string& series_json, const Eigen::VectorXd& x) {
              const auto ms = gm::MetricSeries::from_json(nlohmann::json::parse(series_json));
              return Eigen::MatrixXd(gm::eval_metric_series(ms, x));
          },
          py::arg("series_json"), py::arg("x"));

    m.def("noncritical_metric",
          [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
              const auto local = gm::build_noncritical_metric(x, y);
              py::dict out;
              out["G"] = local.G;
              out["G_std"] = local.G_std;
              out["X1"] = local.X1;
              return out;
          },
          py::arg("x"), py::arg("y"),
          "pointwise positive-definite solution of G y = x");

    m.def("bump_weight", &gm::bump_weight, py::arg("center"), py::arg("radius"),
          py::arg("x"));

    m.def("counterexample_probe",
          [](int levels) {
              const auto probe = gm::counterexample_probe(levels);
              py::dict out;
              out["limit_axis"] = probe.limit_axis;
              out["limit_diagonal"] = probe.limit_diagonal;
              out["difference"] = probe.difference;
              out["g11_at_ones"] = probe.g11_at_ones;
              out["nondifferentiable"] = probe.nondifferentiable;
              return out;
          },
          py::arg("levels") = 10);

    // quantum layer
    m.def("stationary_state",
          [](const Eigen::MatrixXcd& h, const std::vector<Eigen::MatrixXcd>& jumps) {
              const auto gen = gm::qms::lindblad_superoperator(h, jumps);
              return Eigen::MatrixXcd(gm::qms::stationary_state(gen).rho);
          },
          py::arg("H"), py::arg("jumps"));

    m.def("bkm_apply",
          [](const Eigen::MatrixXcd& sigma, const Eigen::MatrixXcd& b) {
              const auto form = gm::qms::make_bkm_form(gm::qms::make_density(sigma, 1e-12));
              return Eigen::MatrixXcd(gm::qms::bkm_apply(form, b));
          },
          py::arg("sigma"), py::arg("B"));

    m.def("bkm_inv_apply",
          [](const Eigen::MatrixXcd& sigma, const Eigen::MatrixXcd& b) {
              const auto form = gm::qms::make_bkm_form(gm::qms::make_density(sigma, 1e-12));
              return Eigen::MatrixXcd(gm::qms::bkm_inv_apply(form, b));
          },
          py::arg("sigma"), py::arg("B"));

    m.def("relative_entropy",
          [](const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma) {
              return gm::qms::relative_entropy(gm::qms::make_density(rho, 1e-12),
                                               gm::qms::make_density(sigma, 1e-12));
          },
          py::arg("rho"), py::arg("sigma"));

    m.def("entropy_production",
          [](const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& h,
             const std::vector<Eigen::MatrixXcd>& jumps) {
              const auto gen = gm::qms::lindblad_superoperator(h, jumps);
              const auto sigma = gm::qms::stationary_state(gen);
              return gm::qms::entropy_production(gm::qms::make_density(rho, 1e-12), sigma,
                                                 gen);
          },
          py::arg("rho"), py::arg("H"), py::arg("jumps"));

    m.def("check_gradient_structure",
          [](const Eigen::MatrixXcd& h, const std::vector<Eigen::MatrixXcd>& jumps,
             int samples, unsigned seed) {
              const auto gen = gm::qms::lindblad_superoperator(h, jumps);
              gm::qms::GradientTolerances tols;
              const auto rep = gm::qms::check_gradient_structure(gen, samples, seed, tols);
              return py::module_::import("json").attr("loads")(rep.to_json(tols).dump());
          },
          py::arg("H"), py::arg("jumps"), py::arg("samples") = 200, py::arg("seed") = 0);

    m.def("check_bkm_detailed_balance",
          [](const Eigen::MatrixXcd& h, const std::vector<Eigen::MatrixXcd>& jumps,
             double tol) {
              const auto gen = gm::qms::lindblad_superoperator(h, jumps);
              const auto sigma = gm::qms::stationary_state(gen);
              return gm::qms::check_bkm_detailed_balance(gen, sigma, tol);
          },
          py::arg("H"), py::arg("jumps"), py::arg("tol") = 1e-8);

    py::register_exception<gm::Error>(m, "GradmetricError");
}
