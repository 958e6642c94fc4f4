#include "radflow/run_config.hpp"

#include "radflow/errors.hpp"
#include "radflow/io_util.hpp"

namespace radflow {

namespace {

const char* kSynthPrefix = "synth_";

} // namespace

void RunConfig::validate() const {
	model.validate();
	optim.validate();
	synth.validate();
	if (group_by != "none" && group_by != "category" && group_by != "popularity") {
		throw ConfigError("group_by must be none, category or popularity");
	}
	if (eval_batch_size < 1) throw ConfigError("eval_batch_size must be >= 1");
	for (double f : value_fractions)
		if (!(f >= 0 && f <= 1)) throw ConfigError("value_fractions must lie in [0, 1]");
	for (double f : edge_fractions)
		if (!(f >= 0 && f <= 1)) throw ConfigError("edge_fractions must lie in [0, 1]");
}

void to_json(nlohmann::json& j, const RunConfig& c) {
	j = nlohmann::json{{"panel", c.panel},
	                   {"edges", c.edges},
	                   {"out", c.out},
	                   {"source", c.source},
	                   {"series_csv", c.series_csv},
	                   {"links", c.links},
	                   {"train_end", c.train_end},
	                   {"val_start", c.val_start},
	                   {"test_start", c.test_start},
	                   {"setting", to_string(c.setting)},
	                   {"checkpoint", c.checkpoint},
	                   {"forecast_checkpoint", c.forecast_checkpoint},
	                   {"compare_checkpoint", c.compare_checkpoint},
	                   {"nonzero_only", c.nonzero_only},
	                   {"eval_batch_size", c.eval_batch_size},
	                   {"group_by", c.group_by},
	                   {"baselines", c.baselines},
	                   {"log_every", c.log_every},
	                   {"value_fractions", c.value_fractions},
	                   {"edge_fractions", c.edge_fractions},
	                   {"counterfactuals", c.counterfactuals}};
	j.update(nlohmann::json(c.model));
	j.update(nlohmann::json(c.optim));
	nlohmann::json synth = c.synth;
	synth.erase("seed");
	for (auto& [key, value] : synth.items()) j[kSynthPrefix + key] = value;
}

void from_json(const nlohmann::json& j, RunConfig& c) {
	c.panel = j.at("panel").get<std::string>();
	c.edges = j.at("edges").get<std::string>();
	c.out = j.at("out").get<std::string>();
	c.source = j.at("source").get<std::string>();
	c.series_csv = j.at("series_csv").get<std::string>();
	c.links = j.at("links").get<std::string>();
	c.train_end = j.at("train_end").get<std::size_t>();
	c.val_start = j.at("val_start").get<std::size_t>();
	c.test_start = j.at("test_start").get<std::size_t>();
	c.setting = parse_setting(j.at("setting").get<std::string>());
	c.checkpoint = j.at("checkpoint").get<std::string>();
	c.forecast_checkpoint = j.at("forecast_checkpoint").get<std::string>();
	c.compare_checkpoint = j.at("compare_checkpoint").get<std::string>();
	c.nonzero_only = j.at("nonzero_only").get<bool>();
	c.eval_batch_size = j.at("eval_batch_size").get<std::size_t>();
	c.group_by = j.at("group_by").get<std::string>();
	c.baselines = j.at("baselines").get<bool>();
	c.log_every = j.at("log_every").get<std::size_t>();
	c.value_fractions = j.at("value_fractions").get<std::vector<double>>();
	c.edge_fractions = j.at("edge_fractions").get<std::vector<double>>();
	c.counterfactuals = j.at("counterfactuals").get<std::vector<std::array<std::int64_t, 3>>>();
	c.model = j.get<ModelConfig>();
	c.optim = j.get<OptimConfig>();
	nlohmann::json synth{{"seed", c.optim.seed}};
	for (const auto& [key, value] : j.items())
		if (key.rfind(kSynthPrefix, 0) == 0) synth[key.substr(std::string(kSynthPrefix).size())] = value;
	c.synth = synth.get<SynthConfig>();
}

RunConfig resolve_config(const nlohmann::json& doc) {
	if (!doc.is_object()) throw ConfigError("config must be a JSON object");
	nlohmann::json merged = RunConfig{};
	for (const auto& [key, value] : doc.items()) {
		if (!merged.contains(key)) throw ConfigError("unknown config key '" + key + "'");
		merged[key] = value;
	}
	RunConfig c;
	try {
		c = merged.get<RunConfig>();
	} catch (const nlohmann::json::exception& e) {
		throw ConfigError(std::string("bad config value: ") + e.what());
	}
	c.validate();
	return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
	nlohmann::json doc;
	try {
		doc = nlohmann::json::parse(io::read_file(path));
	} catch (const nlohmann::json::parse_error& e) {
		throw ConfigError(path.string() + ": " + e.what());
	} catch (const DataError& e) {
		throw ConfigError(e.what());
	}
	return resolve_config(doc);
}

ResolvedSplit resolve_split(const RunConfig& config, std::size_t steps) {
	const std::size_t B = config.model.backcast, F = config.model.horizon;
	ResolvedSplit s;
	s.test_start = config.test_start ? config.test_start : (steps >= F ? steps - F : 0);
	s.val_start = config.val_start ? config.val_start : (s.test_start >= F ? s.test_start - F : 0);
	s.train_end = config.train_end ? config.train_end : s.val_start;
	if (s.test_start + F > steps) {
		throw ConfigError("test window [" + std::to_string(s.test_start) + ", " + std::to_string(s.test_start + F) +
		                  ") exceeds the " + std::to_string(steps) + " available steps");
	}
	if (s.val_start < B || s.test_start < B) throw ConfigError("split leaves less than one backcast of history");
	if (s.train_end > steps) throw ConfigError("train_end exceeds the available steps");
	return s;
}

} // namespace radflow
