#pragma once

#include <cstdint>
#include <vector>

#include "radflow/autodiff.hpp"
#include "radflow/model_config.hpp"

namespace radflow {

enum class CombineMode { projected, direct };

struct AggregateResult {
	ad::Var aggregate; // the aggregated neighbour embedding, [n, *]
	Tensor weights;    // [n, heads, slots + 1] attention scores; empty for mean aggregation
};

// Neighbour aggregation producing the network term. Inputs are batched:
// `ego` is [n, E] and `neighbors` is [n * slots, E] where row b * slots + s is
// slot s of ego b; `present` flags which slots hold a neighbour at this step.
class FlowAggregator {
public:
	static void register_parameters(ad::ParameterSet& params, const ModelConfig& config, Rng& rng);

	FlowAggregator(ad::ParameterSet& params, const ModelConfig& config);

	const ModelConfig& config() const { return config_; }

	// GELU(sum_i lambda_i W_V u_i) with lambda the softmax of scaled
	// dot products between W_Q ego and W_K u_i, plus the null slot.
	AggregateResult aggregate_attention(ad::Tape& tape, ad::Var ego, ad::Var neighbors,
	                                    const std::vector<std::uint8_t>& present, std::size_t slots) const;
	// Arithmetic mean of raw neighbour embeddings; zero when empty.
	ad::Var aggregate_graphsage(ad::Var neighbors, const std::vector<std::uint8_t>& present, std::size_t slots) const;
	// Dispatches on the configured variant.
	AggregateResult aggregate(ad::Tape& tape, ad::Var ego, ad::Var neighbors, const std::vector<std::uint8_t>& present,
	                          std::size_t slots) const;

	ad::Var combine_ego(ad::Tape& tape, ad::Var ego, ad::Var aggregate, CombineMode mode) const;
	ad::Var combine_ego(ad::Tape& tape, ad::Var ego, ad::Var aggregate) const;
	ad::Var network_forecast(ad::Tape& tape, ad::Var combined) const;

private:
	ModelConfig config_;
	ad::Parameter* w_q_ = nullptr;
	ad::Parameter* w_k_ = nullptr;
	ad::Parameter* w_v_ = nullptr;
	ad::Parameter* null_key_ = nullptr;
	ad::Parameter* null_value_ = nullptr;
	ad::Parameter* w_e_ = nullptr;
	ad::Parameter* w_n_ = nullptr;
	ad::Parameter* w_a_ = nullptr;
};

// Final forecast in log space: recurrent term plus network term.
ad::Var combine_forecast(ad::Var recurrent, ad::Var network);

} // namespace radflow
