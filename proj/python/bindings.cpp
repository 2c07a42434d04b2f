#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pulsedrive/runner.hpp"

namespace py = pybind11;
namespace pd = pulsedrive;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict metrics_dict(const pd::MetricsReport& r) {
    py::dict d;
    d["strategy"] = std::string(pd::to_string(r.strategy));
    d["m"] = r.m;
    d["pf"] = r.pf;
    d["p_out_w"] = r.p_out_w;
    d["cond_igbt_w"] = r.cond_igbt_w;
    d["sw_igbt_w"] = r.sw_igbt_w;
    d["cond_fet_w"] = r.cond_fet_w;
    d["sw_fet_w"] = r.sw_fet_w;
    d["total_loss_w"] = r.total_loss_w;
    d["thd"] = r.thd;
    d["thd_ia"] = r.thd_ia();
    d["ripple_pp_v"] = r.ripple_pp_v;
    d["sur"] = r.sur;
    d["commutations_frontend"] = r.commutations_frontend;
    d["commutations_backend"] = r.commutations_backend;
    d["v_fund_rms"] = r.v_fund_rms;
    d["i_fund_rms"] = r.i_fund_rms;
    d["error"] = r.error;
    return d;
}

py::dict trace_dict(const pd::SimTrace& tr) {
    py::dict d;
    d["t"] = to_array(tr.t);
    d["v_dc1"] = to_array(tr.v_dc1);
    d["v_dc2"] = to_array(tr.v_dc2);
    d["i_L"] = to_array(tr.i_L);
    d["i_a"] = to_array(tr.i_a);
    d["i_b"] = to_array(tr.i_b);
    d["i_c"] = to_array(tr.i_c);
    d["n_series"] = py::array_t<int>(static_cast<py::ssize_t>(tr.n_series.size()), tr.n_series.data());
    py::list modules;
    for (const auto& i : tr.i_mdl) modules.append(to_array(i));
    d["i_mdl"] = modules;
    return d;
}

pd::Scenario scenario_with(const std::string& text, const std::vector<std::string>& overrides) {
    auto doc = pd::Document::parse(text);
    for (const auto& o : overrides) doc.apply_override(o);
    return pd::scenario_from_document(doc);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pulsating dc-link drive simulator";

    // Translators run newest first, so the base class goes in before its subclasses.
    py::register_exception<pd::Error>(m, "SimulationError", PyExc_RuntimeError);
    py::register_exception<pd::ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<pd::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<pd::IoError>(m, "IoError", PyExc_OSError);

    m.def(
        "run",
        [](const std::string& text, const std::vector<std::string>& overrides, bool trace) {
            const auto sc = scenario_with(text, overrides);
            pd::RunOutput out;
            {
                py::gil_scoped_release release;
                out = pd::run_scenario(sc);
            }
            py::dict d;
            d["metrics"] = metrics_dict(out.report);
            if (trace) d["trace"] = trace_dict(out.result.trace);
            return d;
        },
        py::arg("scenario"), py::arg("overrides") = std::vector<std::string>{},
        py::arg("trace") = true, "Simulate a scenario document and return metrics and trace.");

    m.def(
        "compare",
        [](const std::string& text, const std::vector<double>& ms, const std::vector<double>& pfs,
           std::size_t jobs) {
            const auto sc = scenario_with(text, {});
            std::vector<pd::MetricsReport> rows;
            {
                py::gil_scoped_release release;
                rows = pd::run_comparison(sc, ms, pfs, jobs);
            }
            py::list out;
            for (const auto& r : rows) out.append(metrics_dict(r));
            return out;
        },
        py::arg("scenario"), py::arg("m"), py::arg("pf"), py::arg("jobs") = 1,
        "Proposed, SVPWM and DPWM rows at matched peak current.");

    m.def(
        "normalize_scenario",
        [](const std::string& text) { return pd::serialize_scenario(pd::parse_scenario(text)); },
        py::arg("scenario"), "Validated scenario with every parameter written out.");

    m.def(
        "frequency_response",
        [](double L, double C, double r_eq, double f) {
            const auto r = pd::filter_frequency_response({L, C, 0.0, r_eq}, f);
            return py::make_tuple(r.gain, r.phase_deg);
        },
        py::arg("L"), py::arg("C"), py::arg("r_eq"), py::arg("f"),
        "Gain and phase (degrees) of the dc-link filter.");

    m.def(
        "envelope",
        [](double va, double vb, double vc) { return pd::envelope_dc_ref({va, vb, vc}); },
        py::arg("va"), py::arg("vb"), py::arg("vc"));

    m.def(
        "ripple_analytic",
        [](const std::string& topology, double v_mdl, int n, double m_dc, double L, double C, double f_s) {
            pd::RippleTopology t;
            if (topology == "chb") {
                t = pd::RippleTopology::CHB;
            } else if (topology == "buck") {
                t = pd::RippleTopology::Buck;
            } else {
                throw py::value_error("topology must be 'chb' or 'buck'");
            }
            return pd::ripple_analytic(t, v_mdl, n, m_dc, L, C, f_s);
        },
        py::arg("topology"), py::arg("v_mdl"), py::arg("n"), py::arg("m_dc"), py::arg("L"),
        py::arg("C"), py::arg("f_s"), "Switching ripple semi-amplitude of v_dc2.");
}
