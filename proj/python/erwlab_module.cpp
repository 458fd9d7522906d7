#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "erwlab/cli.hpp"
#include "erwlab/error.hpp"
#include "erwlab/func_expr.hpp"
#include "erwlab/model_io.hpp"
#include "erwlab/oracle.hpp"
#include "erwlab/presets.hpp"
#include "erwlab/sa.hpp"
#include "erwlab/simulate.hpp"
#include "erwlab/theory.hpp"

namespace py = pybind11;
using namespace erwlab;

namespace {

ValidatedModel preset_model(const std::string& name, const Params& params) {
    return require_valid(build_preset(name, params));
}

std::string analyze_json(const std::string& name, const Params& params) {
    return classify(preset_model(name, params)).to_json().dump();
}

py::dict simulate(const std::string& name, const Params& params, long n, int N, std::uint64_t seed, int threads) {
    const auto model = preset_model(name, params);
    EnsembleStats st;
    {
        py::gil_scoped_release release;
        st = ensemble(model, n, N, seed, {}, {}, threads);
    }
    py::dict out;
    std::vector<double> mean, var;
    for (const auto& cs : st.summary) {
        mean.push_back(cs.mean(0));
        var.push_back(cs.cov(0, 0));
    }
    out["checkpoints"] = st.checkpoints;
    out["mean"] = mean;
    out["var"] = var;
    out["final"] = st.values.back();
    return out;
}

std::vector<double> exact_pmf(const std::string& name, const Params& params, int n) {
    return exact_dp_1d(preset_model(name, params), n).pmf;
}

std::vector<double> sa_terminal(const std::string& drift, double theta0, const std::string& noise, long n, int N,
                                std::uint64_t seed) {
    const auto proc = make_sa_process(FuncExpr::parse(drift, 1), theta0, NoiseSpec::parse(noise));
    py::gil_scoped_release release;
    return sa_ensemble(proc, n, N, seed, {n}).theta.back();
}

py::tuple run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "erw-lab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_erwlab, m) {
    m.doc() = "Generalized elephant random walk laboratory";

    static py::exception<Error> exc(m, "ErwlabError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(exc, e.what());
        }
    });

    m.def("eval_expr", [](const std::string& text, double x) { return FuncExpr::parse(text, 1)(x); },
          py::arg("text"), py::arg("x"));
    m.def("canonical_expr", [](const std::string& text, int arity) { return FuncExpr::parse(text, arity).to_string(); },
          py::arg("text"), py::arg("arity") = 1);
    m.def("preset_names", [] {
        std::vector<std::string> names;
        for (const auto& p : list_presets()) names.push_back(p.name);
        return names;
    });
    m.def("preset_json", [](const std::string& name, const Params& params) { return model_to_json(build_preset(name, params)).dump(); },
          py::arg("name"), py::arg("params") = Params{});
    m.def("analyze_json", &analyze_json, py::arg("name"), py::arg("params") = Params{});
    m.def("simulate", &simulate, py::arg("name"), py::arg("params") = Params{}, py::arg("n") = 1000,
          py::arg("N") = 100, py::arg("seed") = 42, py::arg("threads") = 0);
    m.def("exact_pmf", &exact_pmf, py::arg("name"), py::arg("params") = Params{}, py::arg("n") = 10);
    m.def("sa_terminal", &sa_terminal, py::arg("drift"), py::arg("theta0"), py::arg("noise") = "gaussian:1.0",
          py::arg("n") = 1000, py::arg("N") = 100, py::arg("seed") = 42);
    m.def("run_cli", &run_cli, py::arg("args"));
}
