#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qps/cli.hpp"
#include "qps/multiscale.hpp"
#include "qps/operator.hpp"
#include "qps/potential.hpp"
#include "qps/suites.hpp"
#include "qps/transfer.hpp"

namespace py = pybind11;

namespace {

qps::PotentialSpec potential(const std::string& name, const std::vector<double>& coeffs) {
    return qps::preset_by_name(name, coeffs);
}

}  // namespace

PYBIND11_MODULE(_qps, m) {
    m.doc() = "Quasi-periodic Schroedinger operator numerics";
    m.attr("version") = qps::kVersion;
    m.attr("golden") = qps::kGolden;

    m.def(
        "lyapunov",
        [](double omega, double E, double lambda, const std::string& name, const std::vector<double>& coeffs, long n,
           int x_samples, std::uint64_t seed) {
            qps::PotentialSpec v = potential(name, coeffs);
            py::gil_scoped_release release;
            qps::LyapunovEstimate e = qps::lyapunov_estimate(omega, E, lambda, v, n, x_samples, seed);
            return std::make_pair(e.value, e.std_error);
        },
        py::arg("omega"), py::arg("E"), py::arg("lambda_"), py::arg("potential") = "cos",
        py::arg("coeffs") = std::vector<double>{}, py::arg("n") = 10000, py::arg("x_samples") = 100,
        py::arg("seed") = 1, "(L, std_error) from the averaged log-norm of the transfer-matrix product.");

    m.def(
        "eigenvalues",
        [](long a, long b, double x, double omega, double lambda, const std::string& name,
           const std::vector<double>& coeffs) {
            qps::PotentialSpec v = potential(name, coeffs);
            qps::HamiltonianBlock h(qps::IndexInterval(a, b), x, omega, lambda, v);
            return qps::spectrum(h, false).eigenvalues;
        },
        py::arg("a"), py::arg("b"), py::arg("x"), py::arg("omega"), py::arg("lambda_"), py::arg("potential") = "cos",
        py::arg("coeffs") = std::vector<double>{}, "Eigenvalues of the finite block on [a, b], increasing.");

    m.def(
        "log_det",
        [](long a, long b, double x, double omega, double lambda, double E, const std::string& name,
           const std::vector<double>& coeffs) {
            qps::PotentialSpec v = potential(name, coeffs);
            qps::HamiltonianBlock h(qps::IndexInterval(a, b), x, omega, lambda, v);
            qps::SignedLog d = qps::det_f(h, E);
            return std::make_pair(d.sign, d.log_mag);
        },
        py::arg("a"), py::arg("b"), py::arg("x"), py::arg("omega"), py::arg("lambda_"), py::arg("E"),
        py::arg("potential") = "cos", py::arg("coeffs") = std::vector<double>{},
        "(sign, log|det|) of the Dirichlet determinant at E.");

    m.def("suite_names", &qps::suite_names);
    m.def(
        "run_suite_json",
        [](const std::string& name, std::uint64_t seed, double lambda, int trials) {
            qps::SuiteOptions o;
            o.seed = seed;
            o.lambda = lambda;
            o.trials = trials;
            py::gil_scoped_release release;
            return qps::run_suite(name, o).dump();
        },
        py::arg("name"), py::arg("seed") = 1, py::arg("lambda_") = 1e4, py::arg("trials") = 200);

    m.def(
        "schedule",
        [](int N1, double tau, int cap, int scales) {
            qps::ScaleParams p;
            p.N1 = N1;
            p.tau = tau;
            p.cap = cap;
            p.scales = scales;
            p.validate();
            return p.schedule();
        },
        py::arg("N1") = 4, py::arg("tau") = 0.3, py::arg("cap") = 200, py::arg("scales") = 2);
}
