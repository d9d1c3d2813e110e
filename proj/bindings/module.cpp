#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "romerr/config.hpp"
#include "romerr/datagen.hpp"
#include "romerr/dynsys.hpp"
#include "romerr/errors.hpp"
#include "romerr/eval.hpp"
#include "romerr/integrator.hpp"
#include "romerr/noise.hpp"
#include "romerr/pipeline.hpp"
#include "romerr/reduction.hpp"
#include "romerr/regress.hpp"

namespace py = pybind11;
using namespace romerr;

namespace {

Matrix trajectory_states(const Trajectory& traj) {
    Matrix out(traj.states.size(), traj.states.empty() ? 0 : traj.states.front().size());
    for (std::size_t n = 0; n < traj.states.size(); ++n) out.row(n) = traj.states[n];
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "surrogate error data generation and recursive error models";

    py::register_exception<validation_error>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<solver_error>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<training_error>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<compatibility_error>(m, "CompatibilityError", PyExc_ValueError);
    py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<Box>(m, "Box")
        .def_readonly("lo", &Box::lo)
        .def_readonly("hi", &Box::hi)
        .def("contains", &Box::contains, py::arg("mu"), py::arg("tol") = 0.0);

    py::class_<SystemSpec>(m, "SystemSpec")
        .def_readonly("dim", &SystemSpec::dim)
        .def_readonly("name", &SystemSpec::name)
        .def_readonly("domain", &SystemSpec::domain)
        .def("velocity",
             [](const SystemSpec& sys, const Vector& x, double t, const ParamVector& mu) {
                 return sys.velocity(x, t, mu);
             })
        .def("initial_condition",
             [](const SystemSpec& sys, const ParamVector& mu) { return sys.initial_condition(mu); })
        .def("qoi", [](const SystemSpec& sys, const Vector& x, double t, const ParamVector& mu) {
            return sys.qoi(x, t, mu);
        });

    m.def("build_advection_diffusion", &build_advection_diffusion, py::arg("n_cells"));
    m.def("build_burgers_fom", &build_burgers_fom, py::arg("cell_width"));
    m.def("build_linear_prolongation", &build_linear_prolongation, py::arg("fine_width"),
          py::arg("coarse_width"), py::arg("domain_length"));

    py::class_<ProlongationOp>(m, "ProlongationOp")
        .def_readonly("coarse_dim", &ProlongationOp::coarse_dim)
        .def_readonly("fine_dim", &ProlongationOp::fine_dim);
    m.def("prolong", &prolong, py::arg("op"), py::arg("coarse_state"), py::arg("mu"));

    py::class_<MultistepScheme>(m, "MultistepScheme")
        .def_static("implicit_euler", &MultistepScheme::implicit_euler)
        .def_static("crank_nicolson", &MultistepScheme::crank_nicolson)
        .def_static("from_name", &MultistepScheme::from_name)
        .def_readonly("alphas", &MultistepScheme::alphas)
        .def_readonly("betas", &MultistepScheme::betas);

    py::class_<Trajectory>(m, "Trajectory")
        .def_property_readonly("states", &trajectory_states)
        .def_property_readonly("dt", [](const Trajectory& t) { return t.grid.dt; })
        .def_property_readonly("n_steps", [](const Trajectory& t) { return t.grid.n_steps; })
        .def_readonly("mu", &Trajectory::mu);

    m.def(
        "integrate",
        [](const SystemSpec& sys, const MultistepScheme& scheme, double dt, int n_steps,
           const ParamVector& mu) { return integrate(sys, scheme, TimeGrid{dt, n_steps}, mu); },
        py::arg("system"), py::arg("scheme"), py::arg("dt"), py::arg("n_steps"), py::arg("mu"));

    py::enum_<ReferenceRule>(m, "ReferenceRule")
        .value("InitialState", ReferenceRule::InitialState)
        .value("Zero", ReferenceRule::Zero);

    py::class_<PODBasis>(m, "PODBasis")
        .def_readonly("columns", &PODBasis::columns)
        .def_readonly("reference", &PODBasis::reference)
        .def_readonly("K", &PODBasis::K);

    m.def("compute_pod", &compute_pod, py::arg("snapshot_trajectories"), py::arg("x_ref_rule"),
          py::arg("skip"), py::arg("K"));
    m.def("galerkin_reduce", &galerkin_reduce, py::arg("system"), py::arg("basis"));
    m.def("energy_truncate", &energy_truncate, py::arg("singular_values"), py::arg("energy"));

    py::class_<ResidualPCA>(m, "ResidualPCA")
        .def_readonly("basis", &ResidualPCA::basis)
        .def_readonly("mean", &ResidualPCA::mean)
        .def_readonly("singular_values", &ResidualPCA::singular_values)
        .def_property_readonly("n_r", &ResidualPCA::n_r);

    py::class_<SamplingMatrix>(m, "SamplingMatrix").def_readonly("rows", &SamplingMatrix::rows);

    m.def("build_residual_pca", &build_residual_pca, py::arg("residual_snapshots"),
          py::arg("energy"));
    m.def("qsample_select", &qsample_select, py::arg("pca"), py::arg("n_s"));
    m.def("pca_project", &pca_project, py::arg("pca"), py::arg("residual"));
    m.def("gappy_reconstruct", &gappy_reconstruct, py::arg("pca"), py::arg("sampling"),
          py::arg("sampled"), py::arg("sampled_mean"));

    m.def("fvu", &fvu, py::arg("truth"), py::arg("predictions"));
    m.def(
        "error_bound_sequence",
        [](const std::vector<double>& residual_norms, const std::vector<double>& initial_errors,
           double kappa, const MultistepScheme& scheme, double dt) {
            BoundParams params;
            params.kappa = kappa;
            params.scheme = scheme;
            params.dt = dt;
            return error_bound_sequence(residual_norms, initial_errors, params);
        },
        py::arg("residual_norms"), py::arg("initial_errors"), py::arg("kappa"), py::arg("scheme"),
        py::arg("dt"));
    m.def(
        "spectral_norm",
        [](const SystemSpec& sys, const ParamVector& mu) {
            return spectral_norm(linear_system_matrix(sys, mu));
        },
        py::arg("system"), py::arg("mu"));

    py::class_<NoiseModel>(m, "NoiseModel")
        .def_property_readonly("kind", [](const NoiseModel& n) { return to_string(n.kind); })
        .def_readonly("sigma2", &NoiseModel::sigma2)
        .def_readonly("b", &NoiseModel::b)
        .def_readonly("c", &NoiseModel::c)
        .def_readonly("degenerate", &NoiseModel::degenerate);

    m.def("fit_gaussian", &fit_gaussian, py::arg("errors"));
    m.def("fit_laplacian", &fit_laplacian, py::arg("errors"));
    m.def("fit_ar1", &fit_ar1, py::arg("error_sequences"));
    m.def("noise_scale_sequence", &noise_scale_sequence, py::arg("model"), py::arg("horizon"));
    m.def("validation_frequency", &validation_frequency, py::arg("model"),
          py::arg("error_sequences"), py::arg("coverage"));
    m.def(
        "ks_statistic",
        [](std::vector<double> errors, const std::string& reference) {
            return ks_statistic(std::move(errors), reference == "laplace"
                                                       ? ReferenceCdf::StandardLaplace
                                                       : ReferenceCdf::StandardNormal);
        },
        py::arg("standardized_errors"), py::arg("reference") = "normal");

    m.def("sample_parameters", &sample_parameters, py::arg("domain"), py::arg("count"),
          py::arg("seed"));
    py::enum_<KnnWeighting>(m, "KnnWeighting")
        .value("Uniform", KnnWeighting::Uniform)
        .value("InverseDistance", KnnWeighting::InverseDistance);
    m.def("knn_fit_predict", &knn_fit_predict, py::arg("train_features"),
          py::arg("train_responses"), py::arg("k"), py::arg("weighting"), py::arg("query"));
    m.def("gp_fit_predict", &gp_fit_predict, py::arg("train_params"), py::arg("responses"),
          py::arg("noise"), py::arg("query"));

    // pipeline commands (same semantics and exit codes as the CLI)
    m.def(
        "run_generate",
        [](const std::string& config, const std::string& out) { return run_generate(config, out); },
        py::arg("config_path"), py::arg("out_dir"));
    m.def(
        "run_train",
        [](const std::string& data, const std::string& family, const std::string& feature,
           const std::string& response, const std::string& config, const std::string& out) {
            return run_train(data, family, feature, response, config, out);
        },
        py::arg("data_dir"), py::arg("family"), py::arg("feature_kind"), py::arg("response"),
        py::arg("config_path"), py::arg("out_path"));
    m.def("run_evaluate", &run_evaluate, py::arg("model_path"), py::arg("data_dir"),
          py::arg("out_dir"));
    m.def("run_report", &run_report, py::arg("evaluation_dirs"), py::arg("out_path"));
}
