#include "radflow/aggregation.hpp"

#include <cmath>

#include "radflow/errors.hpp"

namespace radflow {

namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
	Tensor t(std::move(shape));
	for (Real& v : t.values()) v = static_cast<Real>(uniform(rng, -bound, bound));
	return t;
}

} // namespace

void FlowAggregator::register_parameters(ad::ParameterSet& params, const ModelConfig& config, Rng& rng) {
	const std::size_t H = config.hidden, E = config.embedding_dim(), D = config.dim;
	const double bound = 1.0 / std::sqrt(static_cast<double>(H));
	if (config.variant == Variant::attention) {
		params.add("agg.w_q", uniform_tensor({H, E}, bound, rng));
		params.add("agg.w_k", uniform_tensor({H, E}, bound, rng));
		params.add("agg.w_v", uniform_tensor({H, E}, bound, rng));
		if (config.null_slot) {
			params.add("agg.null_key", uniform_tensor({H}, bound, rng));
			params.add("agg.null_value", uniform_tensor({H}, bound, rng));
		}
	}
	if (!config.direct_combine()) {
		const std::size_t agg_dim = config.variant == Variant::attention ? H : E;
		params.add("agg.w_e", uniform_tensor({H, E}, bound, rng));
		params.add("agg.w_n", uniform_tensor({H, agg_dim}, bound, rng));
		params.add("agg.w_a", uniform_tensor({D, H}, bound, rng));
	} else {
		params.add("agg.w_a", uniform_tensor({D, E}, bound, rng));
	}
}

FlowAggregator::FlowAggregator(ad::ParameterSet& params, const ModelConfig& config) : config_(config) {
	w_q_ = params.find("agg.w_q");
	w_k_ = params.find("agg.w_k");
	w_v_ = params.find("agg.w_v");
	null_key_ = params.find("agg.null_key");
	null_value_ = params.find("agg.null_value");
	w_e_ = params.find("agg.w_e");
	w_n_ = params.find("agg.w_n");
	w_a_ = &params.at("agg.w_a");
	if (config.variant == Variant::attention && (!w_q_ || !w_k_ || !w_v_)) {
		throw ConfigError("attention aggregation parameters missing");
	}
}

AggregateResult FlowAggregator::aggregate_attention(ad::Tape& tape, ad::Var ego, ad::Var neighbors,
                                                    const std::vector<std::uint8_t>& present, std::size_t slots) const {
	if (!w_q_) throw ConfigError("model has no attention parameters");
	ad::Var query = ad::linear(ego, tape.param(*w_q_));
	ad::Var keys = query, values = query;
	if (slots > 0) {
		keys = ad::linear(neighbors, tape.param(*w_k_));
		values = ad::linear(neighbors, tape.param(*w_v_));
	}
	std::optional<ad::Var> nk, nv;
	if (config_.null_slot && null_key_) {
		nk = tape.param(*null_key_);
		nv = tape.param(*null_value_);
	}
	ad::AttentionResult r = ad::multihead_attention(query, keys, values, nk, nv, present, slots, config_.heads);
	return {ad::gelu(r.output), std::move(r.weights)};
}

ad::Var FlowAggregator::aggregate_graphsage(ad::Var neighbors, const std::vector<std::uint8_t>& present,
                                            std::size_t slots) const {
	return ad::masked_group_mean(neighbors, present, slots);
}

AggregateResult FlowAggregator::aggregate(ad::Tape& tape, ad::Var ego, ad::Var neighbors,
                                          const std::vector<std::uint8_t>& present, std::size_t slots) const {
	if (config_.variant == Variant::attention) return aggregate_attention(tape, ego, neighbors, present, slots);
	if (slots == 0) {
		return {tape.constant(Tensor(Shape{ego.rows(), config_.embedding_dim()}, Real{0})), Tensor{}};
	}
	return {aggregate_graphsage(neighbors, present, slots), Tensor{}};
}

ad::Var FlowAggregator::combine_ego(ad::Tape& tape, ad::Var ego, ad::Var aggregate, CombineMode mode) const {
	if (mode == CombineMode::direct) return ad::add(ego, aggregate);
	if (!w_e_ || !w_n_) throw ConfigError("model has no ego/neighbour projections");
	return ad::add(ad::linear(ego, tape.param(*w_e_)), ad::linear(aggregate, tape.param(*w_n_)));
}

ad::Var FlowAggregator::combine_ego(ad::Tape& tape, ad::Var ego, ad::Var aggregate) const {
	return combine_ego(tape, ego, aggregate, config_.direct_combine() ? CombineMode::direct : CombineMode::projected);
}

ad::Var FlowAggregator::network_forecast(ad::Tape& tape, ad::Var combined) const {
	return ad::linear(combined, tape.param(*w_a_));
}

ad::Var combine_forecast(ad::Var recurrent, ad::Var network) {
	return ad::add(recurrent, network);
}

} // namespace radflow
