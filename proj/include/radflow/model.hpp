#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "radflow/aggregation.hpp"
#include "radflow/autodiff.hpp"
#include "radflow/model_config.hpp"
#include "radflow/recurrent.hpp"

namespace radflow {

// Log-space inputs for a batch of series over one window of B + F steps.
struct SeriesBatch {
	std::size_t rows = 0;
	std::vector<Tensor> steps; // one [rows, D] tensor per window step
};

// One level of neighbours. Row p * slots + s of `series` is slot s of parent
// row p (an ego for hop 1, a hop-1 neighbour for hop 2).
struct NeighborLevel {
	std::size_t slots = 0;
	SeriesBatch series;
	std::vector<std::vector<std::uint8_t>> present; // per horizon step, parent_rows * slots flags
	std::vector<std::int64_t> ids;                  // node id per row, -1 for padding
};

struct Episode {
	SeriesBatch ego;
	std::vector<std::int64_t> ego_ids;
	std::optional<NeighborLevel> hop1;
	std::optional<NeighborLevel> hop2;
};

struct ForwardOptions {
	bool train = false;
	Rng* rng = nullptr;
	Feedback ego_feedback = Feedback::own;
	bool keep_layers = false;
};

struct StepOutput {
	ad::Var prediction;                 // [n, D] log space
	ad::Var recurrent;                  // recurrent term
	ad::Var network;                    // network term; invalid when aggregation did not run
	std::vector<Tensor> layers;         // per-block recurrent contributions, when requested
	Tensor attention;                   // [n, heads, slots + 1] for attention models
	std::vector<std::uint8_t> has_neighbors;
};

struct ForwardResult {
	std::vector<StepOutput> steps; // one per horizon step
};

// The full forecaster: recurrent component plus flow aggregation.
class RadflowModel {
public:
	RadflowModel(ModelConfig config, std::uint64_t seed);
	// Adopts an existing parameter set, e.g. from a checkpoint. Throws
	// ConfigError when names or shapes do not match the config.
	RadflowModel(ModelConfig config, ad::ParameterSet params);

	RadflowModel(const RadflowModel& other);
	RadflowModel& operator=(const RadflowModel& other);

	const ModelConfig& config() const { return config_; }
	ad::ParameterSet& parameters() { return params_; }
	const ad::ParameterSet& parameters() const { return params_; }
	const RecurrentStack& stack() const { return *stack_; }
	const FlowAggregator* aggregator() const { return aggregator_ ? &*aggregator_ : nullptr; }

	// Runs B warm-up steps and F horizon steps for every ego in the episode.
	// On a horizon step where an ego has no neighbour present the network
	// term is exactly zero, so such egos reduce to the recurrent forecast.
	ForwardResult forward(ad::Tape& tape, const Episode& episode, const ForwardOptions& options) const;

private:
	void bind();
	std::vector<ad::Var> neighbor_embeddings(ad::Tape& tape, const NeighborLevel& level, const StepContext& ctx) const;

	ModelConfig config_;
	mutable ad::ParameterSet params_;
	std::optional<RecurrentStack> stack_;
	std::optional<FlowAggregator> aggregator_;
};

// The same recurrent parameters with hops = 0, i.e. the model with its
// network component removed.
RadflowModel without_network(const RadflowModel& model);

void save_checkpoint(const std::filesystem::path& path, const RadflowModel& model);
RadflowModel load_checkpoint(const std::filesystem::path& path);

} // namespace radflow
