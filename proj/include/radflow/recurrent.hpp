#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "radflow/autodiff.hpp"
#include "radflow/model_config.hpp"

namespace radflow {

// Value transform shared by every model input and output.
inline double to_log(double raw) { return std::log1p(raw); }
double from_log(double log_value); // expm1, clamped below at 0

struct BlockState {
	ad::Var h;
	ad::Var c;
};

struct BlockOutput {
	ad::Var p; // backcast vector, removed from the residual stream
	ad::Var q; // forecast vector
	ad::Var u; // node vector
	ad::Var h; // LSTM hidden output
};

struct StackOutput {
	ad::Var forecast_repr;         // sum of q over blocks
	ad::Var embedding;             // node embedding per ModelConfig::embedding_source
	std::vector<ad::Var> layer_q;  // per-block q, kept for decomposition
	std::vector<ad::Var> backcast; // per-block p
	ad::Var residual;              // input that a block L+1 would receive
};

struct StepContext {
	bool train = false;
	Rng* rng = nullptr;
};

// The L-block recurrent component. Holds non-owning pointers into a
// ParameterSet; every method works on batches of rows.
class RecurrentStack {
public:
	static void register_parameters(ad::ParameterSet& params, const ModelConfig& config, Rng& rng);

	RecurrentStack(ad::ParameterSet& params, const ModelConfig& config);

	const ModelConfig& config() const { return config_; }

	std::vector<BlockState> initial_state(ad::Tape& tape, std::size_t rows) const;
	ad::Var project_input(ad::Tape& tape, ad::Var obs) const;
	BlockOutput block_step(ad::Tape& tape, std::size_t block, ad::Var z, BlockState& state,
	                       const StepContext& ctx) const;
	StackOutput stack_step(ad::Tape& tape, ad::Var z1, std::vector<BlockState>& states, const StepContext& ctx) const;
	ad::Var recurrent_forecast(ad::Tape& tape, ad::Var forecast_repr) const;

private:
	struct Block {
		ad::Parameter* w_ih;
		ad::Parameter* w_hh;
		ad::Parameter* bias;
		ad::Parameter* ff[3][2]; // backcast, forecast, node heads; two layers each
	};
	ad::Var feed_forward(ad::Tape& tape, ad::Parameter* const (&layers)[2], ad::Var x) const;

	ModelConfig config_;
	ad::Parameter* input_proj_;
	ad::Parameter* output_proj_;
	std::vector<Block> blocks_;
};

enum class Feedback { own, teacher };

// Single-series rollout in log space.
struct Rollout {
	std::vector<Tensor> forecasts;              // F x [D], recurrent forecast per horizon step
	std::vector<Tensor> embeddings;             // F x [E], embedding after consuming the input before each step
	std::vector<std::vector<Tensor>> layers;    // F x L x [D], W_R q^l per block
};

// `series` is [len, D] of log values. Warms up on the first B rows, then
// predicts F steps; `teacher` feeds rows B.. as inputs and needs
// len >= B + F - 1, `own` feeds back each prediction.
Rollout rollout(const RecurrentStack& stack, const Tensor& series, std::size_t horizon, Feedback feedback);

// Per-block forecast contributions, [L][F][D].
std::vector<std::vector<Tensor>> decompose(const RecurrentStack& stack, const Tensor& series, std::size_t horizon);

} // namespace radflow
