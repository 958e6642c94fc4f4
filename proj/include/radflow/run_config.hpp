#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radflow/dataset.hpp"
#include "radflow/model_config.hpp"
#include "radflow/synth.hpp"
#include "radflow/training.hpp"

namespace radflow {

// Everything a command needs, as one flat JSON object. Model and optimizer
// keys appear under their own names, synthetic-data keys carry a "synth_"
// prefix, and "seed" drives both training and generation.
struct RunConfig {
	std::string panel = "panel.bin";
	std::string edges = "edges.tsv";
	std::string out = "out";

	// ingest
	std::string source = "panel";
	std::string series_csv;
	std::string links;

	ModelConfig model;
	OptimConfig optim;
	SynthConfig synth;

	// Splits; 0 picks the defaults: test on the final horizon, validate on
	// the horizon before it, train on everything earlier.
	std::size_t train_end = 0, val_start = 0, test_start = 0;

	Setting setting = Setting::imputation;
	std::string checkpoint = "out/best.ckpt";
	std::string forecast_checkpoint;  // hops = 0 model for the forecast setting
	std::string compare_checkpoint;   // paired t-test against this model
	bool nonzero_only = false;
	std::size_t eval_batch_size = 64;
	std::string group_by = "none";    // none, category or popularity
	bool baselines = false;           // copy-step, copy-week and ARNet alongside the model
	std::size_t log_every = 100;

	std::vector<double> value_fractions;
	std::vector<double> edge_fractions;
	std::vector<std::array<std::int64_t, 3>> counterfactuals; // (ego, neighbour, step offset into the test horizon)

	void validate() const; // throws ConfigError
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// Defaults overlaid with `doc`; unknown keys and ill-typed values raise
// ConfigError.
RunConfig resolve_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

struct ResolvedSplit {
	std::size_t train_end = 0, val_start = 0, test_start = 0;
};
ResolvedSplit resolve_split(const RunConfig& config, std::size_t steps);

} // namespace radflow
