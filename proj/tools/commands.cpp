#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "radflow/errors.hpp"
#include "radflow/eval.hpp"
#include "radflow/ingest.hpp"
#include "radflow/io_util.hpp"
#include "radflow/run_config.hpp"
#include "radflow/synth.hpp"
#include "radflow/training.hpp"

namespace fs = std::filesystem;

namespace radflow::cli {

namespace {

struct Overrides {
	std::string config;
	std::optional<std::uint64_t> seed;
	std::optional<std::string> out;
	std::optional<std::string> setting;
	std::optional<std::size_t> hops;
	std::optional<std::string> variant;
};

// Comment lines first, then the column header, then rows.
class Csv {
public:
	Csv(const std::vector<std::string>& comments, const std::vector<std::string>& columns) {
		for (const auto& c : comments) text_ << "# " << c << '\n';
		row(columns);
		text_.precision(12);
	}
	template <class... T>
	void add(const T&... cells) {
		bool first = true;
		((text_ << (first ? "" : ",") << cells, first = false), ...);
		text_ << '\n';
	}
	void row(const std::vector<std::string>& cells) {
		for (std::size_t i = 0; i < cells.size(); ++i) text_ << (i ? "," : "") << cells[i];
		text_ << '\n';
	}
	void write(const fs::path& path) const { io::write_atomic(path, text_.str()); }

private:
	std::ostringstream text_;
};

std::string quoted(const std::string& s) {
	if (s.find_first_of(",\"\n") == std::string::npos) return s;
	std::string out = "\"";
	for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
	return out + "\"";
}

RunConfig load(const Overrides& o) {
	nlohmann::json doc = nlohmann::json::object();
	if (!o.config.empty()) {
		try {
			doc = nlohmann::json::parse(io::read_file(o.config));
		} catch (const nlohmann::json::parse_error& e) {
			throw ConfigError(o.config + ": " + e.what());
		} catch (const DataError& e) {
			throw ConfigError(e.what());
		}
		if (!doc.is_object()) throw ConfigError(o.config + ": config must be a JSON object");
	}
	if (o.seed) doc["seed"] = *o.seed;
	if (o.out) doc["out"] = *o.out;
	if (o.setting) doc["setting"] = *o.setting;
	if (o.hops) doc["hops"] = *o.hops;
	if (o.variant) doc["variant"] = *o.variant;
	return resolve_config(doc);
}

void echo_config(const RunConfig& c) {
	fs::create_directories(c.out);
	io::write_atomic(fs::path(c.out) / "resolved_config.json", nlohmann::json(c).dump(2) + "\n");
}

Dataset load_data(const RunConfig& c) {
	SeriesPanel panel = load_panel(c.panel);
	DynamicGraph graph = load_edges(c.edges, panel.nodes(), panel.steps());
	return Dataset(std::move(panel), std::move(graph));
}

RadflowModel load_model(const std::string& path, const RunConfig& c) {
	if (path.empty() || !fs::exists(path)) throw DataError("checkpoint missing: " + (path.empty() ? "(none)" : path));
	RadflowModel model = load_checkpoint(path);
	ModelConfig want = c.model, got = model.config();
	want.dropout = got.dropout = 0;
	if (!(want == got)) {
		throw ConfigError("checkpoint " + path + " was trained with " + nlohmann::json(model.config()).dump() +
		                  ", which does not match the config");
	}
	return model;
}

EvalOptions eval_options(const RunConfig& c, std::size_t horizon_start) {
	EvalOptions eo;
	eo.setting = c.setting;
	eo.horizon_start = horizon_start;
	eo.batch_size = c.eval_batch_size;
	eo.metric.nonzero_only = c.nonzero_only;
	return eo;
}

// Forecast setting needs the network-free model for neighbour rollouts.
std::optional<RadflowModel> forecast_model(const RunConfig& c) {
	if (c.setting != Setting::forecast || c.model.hops == 0) return std::nullopt;
	if (c.forecast_checkpoint.empty()) {
		throw ConfigError("the forecast setting needs forecast_checkpoint, a hops = 0 model for neighbour forecasts");
	}
	if (!fs::exists(c.forecast_checkpoint)) throw DataError("checkpoint missing: " + c.forecast_checkpoint);
	RadflowModel m = load_checkpoint(c.forecast_checkpoint);
	if (m.config().hops != 0) throw ConfigError("forecast_checkpoint must be a hops = 0 model");
	return m;
}

nlohmann::json metric_line(const std::string& kind, const MetricReport& r) {
	return {{"kind", kind},         {"smape", r.smape}, {"rmse", r.rmse},
	        {"mae", r.mae},         {"samples", r.samples}, {"terms", r.terms}};
}

std::string model_tag(const ModelConfig& m) {
	return "hops=" + std::to_string(m.hops) + " variant=" + to_string(m.variant);
}

// ---- commands -------------------------------------------------------------

int cmd_ingest(const RunConfig& c) {
	if (c.series_csv.empty() || c.links.empty()) throw ConfigError("ingest needs series_csv and links");
	IngestedData data = ingest(c.source, c.series_csv, c.links);
	write_ingested(c.out, data);
	std::cout << nlohmann::json(data.report).dump() << '\n';
	return 0;
}

int cmd_synth(const RunConfig& c) {
	const SynthData d = generate(c.synth);
	fs::create_directories(c.out);
	save_panel(fs::path(c.out) / "panel.bin", d.panel);
	save_edges(fs::path(c.out) / "edges.tsv", d.graph.edges());
	Csv influence({"ground-truth influence of src on dst: gamma times the mean share of dst's in-neighbours"},
	              {"src", "dst", "influence"});
	const std::size_t N = d.panel.nodes();
	for (std::size_t i = 0; i < N; ++i)
		for (std::size_t j = 0; j < N; ++j)
			if (d.influence[i * N + j] != 0) influence.add(i, j, d.influence[i * N + j]);
	influence.write(fs::path(c.out) / "influence.csv");
	std::cout << "synth: " << N << " nodes, " << d.panel.steps() << " steps, " << d.graph.edge_count()
	          << " edge intervals\n";
	return 0;
}

int cmd_train(const RunConfig& c) {
	const Dataset data = load_data(c);
	const ResolvedSplit split = resolve_split(c, data.steps());
	FitOptions fo;
	fo.split = {split.train_end, split.val_start};
	fo.checkpoint_dir = fs::path(c.out);
	fo.log_every = std::max<std::size_t>(1, c.log_every);
	std::ostringstream log;
	log.precision(10);
	fo.on_step = [&](const TrainLogEntry& e) {
		const nlohmann::json line{
		    {"step", e.step}, {"lr", e.lr}, {"loss", e.loss}, {"grad_norm", e.grad_norm}, {"wall_ms", e.wall_ms}};
		log << line.dump() << '\n';
		std::cerr << "step " << e.step << " loss " << e.loss << '\n';
	};
	const FitResult r = fit(data, c.model, c.optim, fo);
	io::write_atomic(fs::path(c.out) / "train_log.jsonl", log.str());
	const nlohmann::json summary{{"best_epoch", r.best_epoch}, {"val_smape", r.val_smape}, {"train_end", split.train_end},
	                             {"val_start", split.val_start}};
	io::write_atomic(fs::path(c.out) / "train_summary.json", summary.dump(2) + "\n");
	std::cout << "best epoch " << r.best_epoch << ", validation SMAPE " << r.val_smape[r.best_epoch - 1] << '\n';
	return 0;
}

int cmd_eval(const RunConfig& c) {
	const Dataset data = load_data(c);
	const ResolvedSplit split = resolve_split(c, data.steps());
	const RadflowModel model = load_model(c.checkpoint, c);
	const auto base = forecast_model(c);
	EvalOptions eo = eval_options(c, split.test_start);
	eo.forecast_model = base ? &*base : nullptr;
	const EvalResult res = evaluate(model, data, eo);

	std::ostringstream out;
	nlohmann::json overall = metric_line("overall", res.report);
	overall["setting"] = to_string(c.setting);
	overall["hops"] = c.model.hops;
	overall["variant"] = to_string(c.model.variant);
	overall["nonzero_only"] = c.nonzero_only;
	overall["test_start"] = split.test_start;
	out << overall.dump() << '\n';
	for (std::size_t i = 0; i < res.bundles.size(); ++i) {
		const NodeId n = res.bundles[i].node;
		out << nlohmann::json{{"kind", "node"},
		                      {"node", n},
		                      {"name", data.raw.meta()[n].name},
		                      {"smape", res.report.node_smape[i]},
		                      {"rmse", res.report.node_rmse[i]},
		                      {"mae", res.report.node_mae[i]}}
		           .dump()
		    << '\n';
	}
	if (c.group_by != "none") {
		std::vector<std::string> keys;
		for (const auto& b : res.bundles) {
			keys.push_back(c.group_by == "category"
			                   ? data.raw.meta()[b.node].category
			                   : popularity_bucket(mean_value(data.filled, b.node, 0, split.test_start)));
		}
		for (const auto& [key, report] : grouped_metrics(res, keys, eo.metric)) {
			nlohmann::json line = metric_line("group", report);
			line["by"] = c.group_by;
			line["key"] = key;
			out << line.dump() << '\n';
		}
	}
	if (c.baselines) {
		std::vector<std::vector<double>> step, week, arnet, truth;
		std::optional<Arnet> ar;
		if (c.model.dim == 1) {
			ArnetConfig ac;
			ac.train_end = split.train_end;
			ac.optim.seed = c.optim.seed;
			ar = arnet_fit(data, ac);
		}
		for (const auto& b : res.bundles) {
			truth.push_back(b.truth);
			step.push_back(baseline_copy_step(data, b.node, split.test_start, c.model.horizon));
			week.push_back(baseline_copy_week(data, b.node, split.test_start, c.model.horizon));
			if (ar) arnet.push_back(ar->predict(data, b.node, split.test_start, c.model.horizon));
		}
		auto line = [&](const std::string& name, const std::vector<std::vector<double>>& preds) {
			nlohmann::json l = metric_line("baseline", compute_metrics(preds, truth, eo.metric));
			l["name"] = name;
			out << l.dump() << '\n';
		};
		line("copy_step", step);
		line("copy_week", week);
		if (ar) line("arnet", arnet);
	}
	if (!c.compare_checkpoint.empty()) {
		if (!fs::exists(c.compare_checkpoint)) throw DataError("checkpoint missing: " + c.compare_checkpoint);
		const RadflowModel other = load_checkpoint(c.compare_checkpoint);
		const EvalResult o = evaluate(other, data, eo);
		const TTestResult t = paired_ttest(res.report.node_smape, o.report.node_smape);
		out << nlohmann::json{{"kind", "ttest"}, {"against", c.compare_checkpoint}, {"t", t.t}, {"p", t.p}, {"n", t.n}}
		           .dump()
		    << '\n';
	}
	io::write_atomic(fs::path(c.out) / "metrics.jsonl", out.str());
	std::cout << model_tag(c.model) << " " << to_string(c.setting) << ": SMAPE " << res.report.smape << ", RMSE "
	          << res.report.rmse << ", MAE " << res.report.mae << '\n';
	return 0;
}

int cmd_forecast(const RunConfig& c) {
	const Dataset data = load_data(c);
	const ResolvedSplit split = resolve_split(c, data.steps());
	const RadflowModel model = load_model(c.checkpoint, c);
	const auto base = forecast_model(c);
	EvalOptions eo = eval_options(c, split.test_start);
	eo.forecast_model = base ? &*base : nullptr;
	const EvalResult res = evaluate(model, data, eo);
	Csv csv({"per-node forecasts on the raw scale, " + model_tag(c.model) + ", setting " + to_string(c.setting)},
	        {"node", "name", "step", "dim", "forecast", "truth"});
	const std::size_t D = c.model.dim;
	for (const auto& b : res.bundles)
		for (std::size_t k = 0; k < c.model.horizon; ++k)
			for (std::size_t d = 0; d < D; ++d)
				csv.add(b.node, quoted(data.raw.meta()[b.node].name), split.test_start + k, d, b.pred[k * D + d],
				        b.truth[k * D + d]);
	csv.write(fs::path(c.out) / "forecast.csv");
	return 0;
}

int cmd_decompose(const RunConfig& c) {
	const Dataset data = load_data(c);
	const ResolvedSplit split = resolve_split(c, data.steps());
	const RadflowModel model = load_model(c.checkpoint, c);
	EvalOptions eo = eval_options(c, split.test_start);
	eo.setting = Setting::imputation;
	eo.keep_layers = true;
	const EvalResult res = evaluate(model, data, eo);
	const std::size_t L = c.model.layers, F = c.model.horizon, D = c.model.dim;

	Csv summary({"per-layer contribution to the log-scale recurrent forecast",
	             "mean across nodes with a 95% t interval, one series per layer"},
	            {"layer", "step", "mean", "ci_low", "ci_high", "nodes"});
	for (const auto& lc : summarize_layers(res, D)) summary.add(lc.layer, lc.step, lc.mean, lc.ci_low, lc.ci_high, lc.n);
	summary.write(fs::path(c.out) / "decompose.csv");

	std::vector<std::string> cols{"node", "step"};
	for (std::size_t l = 0; l < L; ++l) cols.push_back("layer_" + std::to_string(l));
	cols.push_back("recurrent");
	Csv nodes({"per-node layer contributions; the layer columns sum to the recurrent column"}, cols);
	for (const auto& b : res.bundles) {
		for (std::size_t k = 0; k < F; ++k) {
			std::ostringstream row;
			row.precision(17);
			row << b.node << ',' << k;
			for (std::size_t l = 0; l < L; ++l) row << ',' << b.layers[l][k * D];
			row << ',' << b.recurrent[k * D];
			nodes.row({row.str()});
		}
	}
	nodes.write(fs::path(c.out) / "decompose_nodes.csv");
	return 0;
}

int cmd_attention(const RunConfig& c) {
	const Dataset data = load_data(c);
	const ResolvedSplit split = resolve_split(c, data.steps());
	const RadflowModel model = load_model(c.checkpoint, c);
	if (c.model.hops == 0) throw ConfigError("attention export needs a model with network inputs");
	EvalOptions eo = eval_options(c, split.test_start);
	eo.setting = Setting::imputation;
	eo.keep_attention = true;
	const EvalResult res = evaluate(model, data, eo);

	std::vector<std::string> cols{"ego", "step", "slot", "neighbor", "present", "weight"};
	for (std::size_t h = 0; h < c.model.heads; ++h) cols.push_back("head_" + std::to_string(h));
	Csv trace({"attention traces: head-averaged weight per neighbour slot and horizon step; neighbor -1 is the null slot"},
	          cols);
	const bool attention = c.model.variant == Variant::attention;
	for (const auto& b : res.bundles) {
		for (std::size_t k = 0; k < b.attention.size(); ++k) {
			const AttentionStep& a = b.attention[k];
			const std::size_t slots = a.neighbors.size();
			for (std::size_t s = 0; s <= slots; ++s) {
				if (s == slots && !(attention && c.model.null_slot)) break;
				if (s < slots && a.neighbors[s] < 0) continue;
				std::ostringstream row;
				row.precision(12);
				row << b.node << ',' << split.test_start + k << ',' << s << ',' << (s < slots ? a.neighbors[s] : -1) << ','
				    << (s < slots ? int(a.present[s]) : 1) << ',' << (a.heads ? a.mean_weight(s) : 0.0);
				for (std::size_t h = 0; h < c.model.heads; ++h)
					row << ',' << (a.heads ? a.weights[h * (slots + 1) + s] : 0.0);
				trace.row({row.str()});
			}
		}
	}
	trace.write(fs::path(c.out) / "attention.csv");

	Csv contribution({"network share of the forecast, mean over the horizon of |A| / (|R| + |A| + 1e-8) on log-scale terms",
	                  "popularity is the mean raw value before the test window"},
	                 {"node", "name", "popularity", "bucket", "contribution"});
	for (const auto& b : res.bundles) {
		const double pop = mean_value(data.filled, b.node, 0, split.test_start);
		contribution.add(b.node, quoted(data.raw.meta()[b.node].name), pop, popularity_bucket(pop),
		                 network_contribution(b));
	}
	contribution.write(fs::path(c.out) / "contribution.csv");

	if (attention) {
		Csv corr({"correlation of ego and neighbour series over the horizon against mean attention",
		          "defined is 0 when either series is constant"},
		         {"ego", "neighbor", "correlation", "mean_attention", "defined"});
		for (const auto& r : attention_correlation(model, data, eo))
			corr.add(r.ego, r.neighbor, r.correlation, r.mean_attention, int(r.defined));
		corr.write(fs::path(c.out) / "correlation.csv");
	}
	return 0;
}

int cmd_perturb(const RunConfig& c) {
	const Dataset data = load_data(c);
	const ResolvedSplit split = resolve_split(c, data.steps());
	const RadflowModel model = load_model(c.checkpoint, c);
	EvalOptions eo = eval_options(c, split.test_start);
	eo.setting = Setting::imputation;
	Csv curve({"SMAPE after deleting a random fraction of series values or edges, imputation setting"},
	          {"kind", "fraction", "smape"});
	if (!c.value_fractions.empty() || !c.edge_fractions.empty()) {
		for (const auto& p : robustness_sweep(model, data, eo, c.value_fractions, c.edge_fractions, c.optim.seed))
			curve.add(p.kind, p.fraction, p.smape);
	}
	curve.write(fs::path(c.out) / "robustness.csv");
	// Counterfactual steps are offsets into the test horizon.
	if (!c.counterfactuals.empty()) {
		Csv cf({"ego forecast and attention before and after doubling one neighbour value on one horizon step"},
		       {"ego", "step", "neighbor", "attention_before", "attention_after", "forecast_before", "forecast_after",
		        "relative_change"});
		for (const auto& [ego, nb, day] : c.counterfactuals) {
			if (ego < 0 || nb < 0 || day < 0) throw ConfigError("counterfactual entries must be non-negative");
			const auto r = counterfactual_double(model, data, static_cast<NodeId>(ego), static_cast<NodeId>(nb),
			                                     split.test_start + static_cast<std::size_t>(day), split.test_start);
			cf.add(r.ego, r.day, r.neighbor, r.attention_before, r.attention_after, r.forecast_before, r.forecast_after,
			       r.relative_change);
		}
		cf.write(fs::path(c.out) / "counterfactual.csv");
	}
	return 0;
}

} // namespace

int run(int argc, char** argv) {
	std::vector<std::string> args(argv + 1, argv + argc);
	return run(args);
}

int run(const std::vector<std::string>& args) {
	CLI::App app{"Networked time series forecasting"};
	app.require_subcommand(1);
	Overrides o;
	const std::vector<std::pair<std::string, std::string>> commands{
	    {"ingest", "convert source data into panel and edge files"},
	    {"train", "fit a model and write checkpoints"},
	    {"eval", "score a checkpoint on the test window"},
	    {"forecast", "write per-node test forecasts"},
	    {"decompose", "per-layer forecast contributions"},
	    {"attention", "attention traces, network contribution and correlation exports"},
	    {"perturb", "robustness sweeps and counterfactuals"},
	    {"synth", "generate a synthetic networked dataset"}};
	for (const auto& [name, help] : commands) {
		CLI::App* sub = app.add_subcommand(name, help);
		sub->add_option("--config", o.config, "JSON run config")->check(CLI::ExistingFile);
		sub->add_option("--seed", o.seed);
		sub->add_option("--out", o.out);
		sub->add_option("--setting", o.setting)->check(CLI::IsMember({"imputation", "forecast"}));
		sub->add_option("--hops", o.hops)->check(CLI::Range(0, 2));
		sub->add_option("--variant", o.variant)->check(CLI::IsMember({"attention", "graphsage", "meanpool"}));
	}
	std::vector<std::string> reversed(args.rbegin(), args.rend());
	try {
		app.parse(reversed);
	} catch (const CLI::CallForHelp& e) {
		return app.exit(e);
	} catch (const CLI::ParseError& e) {
		app.exit(e);
		return 2;
	}
	const std::string cmd = app.get_subcommands().front()->get_name();
	try {
		const RunConfig c = load(o);
		echo_config(c);
		if (cmd == "ingest") return cmd_ingest(c);
		if (cmd == "synth") return cmd_synth(c);
		if (cmd == "train") return cmd_train(c);
		if (cmd == "eval") return cmd_eval(c);
		if (cmd == "forecast") return cmd_forecast(c);
		if (cmd == "decompose") return cmd_decompose(c);
		if (cmd == "attention") return cmd_attention(c);
		if (cmd == "perturb") return cmd_perturb(c);
	} catch (const ConfigError& e) {
		std::cerr << "config error: " << e.what() << '\n';
		return 2;
	} catch (const DataError& e) { // FormatError included
		std::cerr << "data error: " << e.what() << '\n';
		return 3;
	} catch (const std::exception& e) {
		std::cerr << "error: " << e.what() << '\n';
		return 1;
	}
	return 1;
}

} // namespace radflow::cli
