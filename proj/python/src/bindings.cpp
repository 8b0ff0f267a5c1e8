#include "isac/cli.hpp"
#include "isac/experiment.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace isac;

namespace {

// Defaults merged with a JSON document, as the command line does.
ExperimentConfig parse_config(const std::string& text)
{
    nlohmann::json doc = config_to_json(ExperimentConfig{});
    if (!text.empty())
        doc.merge_patch(nlohmann::json::parse(text));
    return config_from_json(doc);
}

py::dict iterate_dict(const Iterate& it)
{
    py::dict d;
    d["index"] = it.index;
    d["max_crb"] = it.max_crb;
    d["per_irs"] = it.per_irs;
    d["min_sinr"] = it.min_sinr;
    d["power"] = it.power;
    d["tx_guard"] = it.tx_guard;
    return d;
}

py::dict scheme_dict(const SchemeSet& s)
{
    py::dict d;
    d["sensing_only"] = s.sensing_only;
    d["proposed_II"] = s.proposed_ii;
    d["proposed_I"] = s.proposed_i;
    d["zf"] = s.zf;
    d["tx_only"] = s.tx_only;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Joint transmit and reflective beamforming for multi-IRS ISAC";

    auto base = py::register_exception<Error>(m, "IsacError", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
    py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
    py::register_exception<SolverError>(m, "SolverError", base.ptr());
    py::register_exception<ExtractionError>(m, "ExtractionError", base.ptr());

    m.def("default_config", [] { return config_to_json(ExperimentConfig{}).dump(); });
    m.def("check_config", [](const std::string& text) { return config_to_json(parse_config(text)).dump(); });

    py::class_<Scenario>(m, "Scenario")
        .def_static("build", [](const std::string& config, std::uint64_t seed) {
            return make_scenario(parse_config(config), seed);
        }, py::arg("config") = "", py::arg("seed") = 0)
        .def_static("from_json", [](const std::string& text) {
            Scenario s = scenario_from_json(nlohmann::json::parse(text));
            s.validate();
            return s;
        })
        .def("to_json", [](const Scenario& s) { return scenario_to_json(s).dump(); })
        .def_property_readonly("num_bs_antennas", &Scenario::M)
        .def_property_readonly("num_irs_elements", &Scenario::N)
        .def_property_readonly("num_irs", &Scenario::L)
        .def_property_readonly("users_per_irs", &Scenario::K)
        .def_property_readonly("target_doa", [](const Scenario& s) { return s.target_doa; })
        .def("bs_irs", [](const Scenario& s, int l) { return s.bs_irs.at(l); })
        .def("irs_user", [](const Scenario& s, int l, int k) { return s.irs_cu.at(l).at(k); });

    m.def("point_crb", [](const Scenario& s, int l, const CMat& Rx, const CVec& phi) {
        return point_crb(s, l, Rx, phi);
    });
    m.def("point_crb_routes", [](const Scenario& s, int l, const CMat& Rx, const CVec& phi) {
        const CrbRoutes r = point_crb_routes(s, l, Rx, phi);
        return py::dict(py::arg("schur") = r.schur, py::arg("closed") = r.closed, py::arg("inverse") = r.inverse);
    });
    m.def("extended_crb", [](const Scenario& s, int l, const CMat& Rx) { return extended_crb(s, l, Rx); });

    py::class_<Trajectory>(m, "Trajectory")
        .def_property_readonly("variant", [](const Trajectory& t) { return to_string(t.variant); })
        .def_property_readonly("scheme", [](const Trajectory& t) { return to_string(t.scheme); })
        .def_property_readonly("converged", [](const Trajectory& t) { return t.converged; })
        .def_property_readonly("stop", [](const Trajectory& t) { return to_string(t.stop); })
        .def_property_readonly("message", [](const Trajectory& t) { return t.message; })
        .def_property_readonly("final_crb", &Trajectory::final_crb)
        .def_property_readonly("iterations", [](const Trajectory& t) {
            py::list out;
            for (const auto& it : t.iterations)
                out.append(iterate_dict(it));
            return out;
        })
        .def_property_readonly("phases", [](const Trajectory& t) { return t.reflect.phases; })
        .def_property_readonly("sense_covariance", [](const Trajectory& t) { return t.tx.sense; })
        .def_property_readonly("beams", [](const Trajectory& t) { return t.tx.beams; })
        .def("total_covariance", [](const Trajectory& t) { return t.tx.total_covariance(); })
        .def("__repr__", [](const Trajectory& t) { return "<Trajectory " + t.tag() + ">"; });

    m.def("optimize", [](const Scenario& s, const std::string& variant, const std::string& scheme,
                         const std::string& config, std::uint64_t seed) {
        const ExperimentConfig c = parse_config(config);
        const Variant v = variant.empty() ? c.variant : variant_from_string(variant);
        py::gil_scoped_release nogil;
        return run_scheme(scheme_from_string(scheme), v, s, c.orchestrator(seed));
    }, py::arg("scenario"), py::arg("variant") = "", py::arg("scheme") = "proposed", py::arg("config") = "",
       py::arg("seed") = 0);

    m.def("compare_schemes", [](const Scenario& s, const std::string& model, const std::string& config,
                                std::uint64_t seed) {
        if (model != "point" && model != "extended")
            throw ParameterError("model must be 'point' or 'extended'");
        const ExperimentConfig c = parse_config(config);
        SchemeSet r;
        {
            py::gil_scoped_release nogil;
            r = compare_schemes(model == "point" ? TargetModel::Point : TargetModel::Extended, s, c.orchestrator(seed));
        }
        return scheme_dict(r);
    }, py::arg("scenario"), py::arg("model") = "point", py::arg("config") = "", py::arg("seed") = 0);

    m.def("sweep", [](const std::string& config, std::uint64_t seed) {
        const ExperimentConfig c = parse_config(config);
        std::vector<SweepRow> rows;
        {
            py::gil_scoped_release nogil;
            rows = run_sweep(c, seed);
        }
        py::list out;
        for (const auto& r : rows)
            out.append(py::make_tuple(r.x, scheme_dict(r.schemes)));
        return out;
    }, py::arg("config") = "", py::arg("seed") = 0);

    m.def("validate", [](const std::string& config, std::uint64_t seed) {
        const ExperimentConfig c = parse_config(config);
        ValidateReport r;
        {
            py::gil_scoped_release nogil;
            r = run_validate(c, seed);
        }
        py::dict d;
        d["mle_mse"] = r.mle.mse;
        d["mle_se"] = r.mle.mse_se;
        d["mle_bias"] = r.mle.mean_bias;
        d["mle_boundary_hits"] = r.mle.boundary_hits;
        d["mle_crb"] = r.mle_crb;
        d["ls_error"] = r.ls.error_trace;
        d["ls_se"] = r.ls.se;
        d["ls_crb"] = r.ls_crb;
        d["trials"] = r.mle.trials;
        return d;
    }, py::arg("config") = "", py::arg("seed") = 0);

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
            py::gil_scoped_release nogil;
            code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    });
}
