#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "radflow/errors.hpp"
#include "radflow/eval.hpp"
#include "radflow/synth.hpp"
#include "radflow/training.hpp"

namespace py = pybind11;
using namespace radflow;

namespace {

// Python dicts cross the boundary as JSON text.
nlohmann::json to_json_doc(const py::object& obj) {
	if (obj.is_none()) return nlohmann::json::object();
	return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::object from_json_doc(const nlohmann::json& doc) {
	return py::module_::import("json").attr("loads")(doc.dump());
}

template <class T>
T parse_config(const py::object& obj) {
	T value{};
	nlohmann::json doc = nlohmann::json(value);
	doc.merge_patch(to_json_doc(obj));
	try {
		value = doc.get<T>();
	} catch (const nlohmann::json::exception& e) {
		throw ConfigError(e.what());
	}
	value.validate();
	return value;
}

py::array_t<double> panel_array(const SeriesPanel& p) {
	py::array_t<double> out({p.nodes(), p.steps(), p.dim()});
	auto v = out.mutable_unchecked<3>();
	for (std::size_t n = 0; n < p.nodes(); ++n)
		for (std::size_t t = 0; t < p.steps(); ++t)
			for (std::size_t d = 0; d < p.dim(); ++d) v(n, t, d) = p.value(n, t, d);
	return out;
}

py::dict metrics_dict(const MetricReport& r) {
	py::dict d;
	d["smape"] = r.smape;
	d["rmse"] = r.rmse;
	d["mae"] = r.mae;
	d["samples"] = r.samples;
	d["terms"] = r.terms;
	d["node_smape"] = r.node_smape;
	return d;
}

Dataset make_dataset(const std::string& panel, const std::string& edges) {
	SeriesPanel p = load_panel(panel);
	DynamicGraph g = load_edges(edges, p.nodes(), p.steps());
	return Dataset(std::move(p), std::move(g));
}

EvalResult run_eval(const RadflowModel& model, const Dataset& data, std::size_t horizon_start, const std::string& setting,
                    const RadflowModel* forecast_model) {
	EvalOptions eo;
	eo.horizon_start = horizon_start;
	eo.setting = parse_setting(setting);
	eo.forecast_model = forecast_model;
	return evaluate(model, data, eo);
}

} // namespace

PYBIND11_MODULE(_core, m) {
	m.doc() = "Networked time series forecasting";

	py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
	py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
	py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

	py::class_<Dataset>(m, "Dataset")
	    .def(py::init(&make_dataset), py::arg("panel"), py::arg("edges"))
	    .def_property_readonly("nodes", &Dataset::nodes)
	    .def_property_readonly("steps", &Dataset::steps)
	    .def_property_readonly("dim", &Dataset::dim)
	    .def("values", [](const Dataset& d) { return panel_array(d.filled); }, "forward-filled series, [N, T, D]")
	    .def("edges", [](const Dataset& d) {
		    std::vector<std::tuple<NodeId, NodeId, std::size_t, std::size_t>> out;
		    for (const Edge& e : d.graph.edges()) out.emplace_back(e.src, e.dst, e.start, e.end);
		    return out;
	    });

	m.def(
	    "synthesize",
	    [](const py::object& config) {
		    SynthData s = generate(parse_config<SynthConfig>(config));
		    const std::size_t N = s.panel.nodes();
		    py::array_t<double> influence({N, N});
		    std::copy(s.influence.begin(), s.influence.end(), influence.mutable_data());
		    auto base = panel_array(s.base);
		    return py::make_tuple(Dataset(std::move(s.panel), std::move(s.graph)), base, influence);
	    },
	    py::arg("config") = py::none(), "(dataset, base series, influence matrix) from a synthetic config dict");

	py::class_<RadflowModel>(m, "Model")
	    .def(py::init([](const py::object& config, std::uint64_t seed) {
		         return RadflowModel(parse_config<ModelConfig>(config), seed);
	         }),
	         py::arg("config") = py::none(), py::arg("seed") = 0)
	    .def_property_readonly("config", [](const RadflowModel& m) { return from_json_doc(m.config()); })
	    .def("save", [](const RadflowModel& m, const std::filesystem::path& p) { save_checkpoint(p, m); })
	    .def_static("load", &load_checkpoint)
	    .def("without_network", &without_network)
	    .def("parameter_count", [](const RadflowModel& m) {
		    std::size_t n = 0;
		    for (std::size_t i = 0; i < m.parameters().size(); ++i) n += m.parameters()[i].value.size();
		    return n;
	    });

	m.def(
	    "fit",
	    [](const Dataset& data, const py::object& model_config, const py::object& optim_config, std::size_t train_end,
	       std::size_t val_start) {
		    FitOptions fo;
		    fo.split = {train_end, val_start};
		    fo.log_every = 0;
		    const ModelConfig mc = parse_config<ModelConfig>(model_config);
		    const OptimConfig oc = parse_config<OptimConfig>(optim_config);
		    std::optional<FitResult> r;
		    {
			    py::gil_scoped_release release;
			    r.emplace(fit(data, mc, oc, fo));
		    }
		    return py::make_tuple(r->model, r->val_smape);
	    },
	    py::arg("data"), py::arg("model_config"), py::arg("optim_config"), py::arg("train_end"), py::arg("val_start"),
	    "train a model; returns (best model, validation SMAPE per epoch)");

	m.def(
	    "evaluate",
	    [](const RadflowModel& model, const Dataset& data, std::size_t horizon_start, const std::string& setting,
	       const RadflowModel* forecast_model) {
		    return metrics_dict(run_eval(model, data, horizon_start, setting, forecast_model).report);
	    },
	    py::arg("model"), py::arg("data"), py::arg("horizon_start"), py::arg("setting") = "imputation",
	    py::arg("forecast_model") = nullptr);

	m.def(
	    "forecast",
	    [](const RadflowModel& model, const Dataset& data, std::size_t horizon_start, const std::string& setting,
	       const RadflowModel* forecast_model) {
		    const EvalResult r = run_eval(model, data, horizon_start, setting, forecast_model);
		    const std::size_t F = model.config().horizon, D = model.config().dim;
		    py::array_t<double> out({r.bundles.size(), F, D});
		    double* dst = out.mutable_data();
		    for (const auto& b : r.bundles) dst = std::copy(b.pred.begin(), b.pred.end(), dst);
		    return out;
	    },
	    py::arg("model"), py::arg("data"), py::arg("horizon_start"), py::arg("setting") = "imputation",
	    py::arg("forecast_model") = nullptr, "raw-scale forecasts, [N, F, D]");

	m.def(
	    "compute_metrics",
	    [](const std::vector<std::vector<double>>& preds, const std::vector<std::vector<double>>& truths,
	       bool nonzero_only) {
		    MetricOptions o;
		    o.nonzero_only = nonzero_only;
		    return metrics_dict(compute_metrics(preds, truths, o));
	    },
	    py::arg("preds"), py::arg("truths"), py::arg("nonzero_only") = false);

	m.def(
	    "paired_ttest",
	    [](const std::vector<double>& a, const std::vector<double>& b) {
		    const TTestResult r = paired_ttest(a, b);
		    return py::make_tuple(r.t, r.p);
	    },
	    "(t, two-sided p)");
}
