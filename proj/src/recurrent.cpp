#include "radflow/recurrent.hpp"

#include <algorithm>
#include <string>

#include "radflow/errors.hpp"

namespace radflow {

double from_log(double log_value) {
	return std::max(0.0, std::expm1(log_value));
}

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
	Tensor t(Shape{rows, cols});
	for (Real& v : t.values()) v = static_cast<Real>(uniform(rng, -bound, bound));
	return t;
}

const char* head_name(int k) {
	static const char* names[] = {"backcast", "forecast", "node"};
	return names[k];
}

std::string block_prefix(std::size_t l) {
	return "block" + std::to_string(l) + ".";
}

ad::Var sum_all(const std::vector<ad::Var>& xs) {
	ad::Var total = xs.front();
	for (std::size_t i = 1; i < xs.size(); ++i) total = ad::add(total, xs[i]);
	return total;
}

} // namespace

void RecurrentStack::register_parameters(ad::ParameterSet& params, const ModelConfig& config, Rng& rng) {
	const std::size_t H = config.hidden, D = config.dim;
	const double bound = 1.0 / std::sqrt(static_cast<double>(H));
	params.add("input_proj", uniform_matrix(H, D, bound, rng));
	for (std::size_t l = 0; l < config.layers; ++l) {
		const std::string pre = block_prefix(l);
		params.add(pre + "lstm.w_ih", uniform_matrix(4 * H, H, bound, rng));
		params.add(pre + "lstm.w_hh", uniform_matrix(4 * H, H, bound, rng));
		params.add(pre + "lstm.bias", Tensor(Shape{4 * H}, Real{0}));
		for (int k = 0; k < 3; ++k) {
			params.add(pre + head_name(k) + ".w1", uniform_matrix(H, H, bound, rng));
			params.add(pre + head_name(k) + ".w2", uniform_matrix(H, H, bound, rng));
		}
	}
	params.add("output_proj", uniform_matrix(D, H, bound, rng));
}

RecurrentStack::RecurrentStack(ad::ParameterSet& params, const ModelConfig& config)
    : config_(config), input_proj_(&params.at("input_proj")), output_proj_(&params.at("output_proj")) {
	for (std::size_t l = 0; l < config.layers; ++l) {
		const std::string pre = block_prefix(l);
		Block b{};
		b.w_ih = &params.at(pre + "lstm.w_ih");
		b.w_hh = &params.at(pre + "lstm.w_hh");
		b.bias = &params.at(pre + "lstm.bias");
		for (int k = 0; k < 3; ++k) {
			b.ff[k][0] = &params.at(pre + head_name(k) + ".w1");
			b.ff[k][1] = &params.at(pre + head_name(k) + ".w2");
		}
		blocks_.push_back(b);
	}
}

std::vector<BlockState> RecurrentStack::initial_state(ad::Tape& tape, std::size_t rows) const {
	ad::Var zero = tape.constant(Tensor(Shape{rows, config_.hidden}, Real{0}));
	return std::vector<BlockState>(config_.layers, BlockState{zero, zero});
}

ad::Var RecurrentStack::project_input(ad::Tape& tape, ad::Var obs) const {
	if (obs.cols() != config_.dim) {
		throw ShapeError("observation has " + std::to_string(obs.cols()) + " dims, model expects " +
		                 std::to_string(config_.dim));
	}
	return ad::linear(obs, tape.param(*input_proj_));
}

ad::Var RecurrentStack::feed_forward(ad::Tape& tape, ad::Parameter* const (&layers)[2], ad::Var x) const {
	return ad::linear(ad::gelu(ad::linear(x, tape.param(*layers[0]))), tape.param(*layers[1]));
}

BlockOutput RecurrentStack::block_step(ad::Tape& tape, std::size_t block, ad::Var z, BlockState& state,
                                       const StepContext& ctx) const {
	const Block& b = blocks_.at(block);
	const std::size_t H = config_.hidden;
	ad::Var hc = ad::lstm_cell(z, state.h, state.c, tape.param(*b.w_ih), tape.param(*b.w_hh), tape.param(*b.bias));
	state.h = ad::slice_cols(hc, 0, H);
	state.c = ad::slice_cols(hc, H, H);
	ad::Var head_in = state.h;
	if (ctx.train && config_.dropout > 0) {
		if (!ctx.rng) throw std::invalid_argument("training step needs an rng for dropout");
		head_in = ad::dropout(state.h, config_.dropout, true, *ctx.rng);
	}
	return BlockOutput{feed_forward(tape, b.ff[0], head_in), feed_forward(tape, b.ff[1], head_in),
	                   feed_forward(tape, b.ff[2], head_in), state.h};
}

StackOutput RecurrentStack::stack_step(ad::Tape& tape, ad::Var z1, std::vector<BlockState>& states,
                                       const StepContext& ctx) const {
	if (states.size() != blocks_.size()) throw std::invalid_argument("state count does not match block count");
	StackOutput out;
	std::vector<ad::Var> us, hs;
	ad::Var z = z1;
	for (std::size_t l = 0; l < blocks_.size(); ++l) {
		BlockOutput o = block_step(tape, l, z, states[l], ctx);
		z = ad::sub(z, o.p);
		out.layer_q.push_back(o.q);
		out.backcast.push_back(o.p);
		us.push_back(o.u);
		hs.push_back(o.h);
	}
	out.residual = z;
	out.forecast_repr = sum_all(out.layer_q);
	switch (config_.embedding_source) {
	case EmbeddingSource::u: out.embedding = sum_all(us); break;
	case EmbeddingSource::h: out.embedding = sum_all(hs); break;
	case EmbeddingSource::p: out.embedding = sum_all(out.backcast); break;
	case EmbeddingSource::q: out.embedding = out.forecast_repr; break;
	case EmbeddingSource::h_p: out.embedding = ad::concat_cols({sum_all(hs), sum_all(out.backcast)}); break;
	case EmbeddingSource::h_p_q:
		out.embedding = ad::concat_cols({sum_all(hs), sum_all(out.backcast), out.forecast_repr});
		break;
	}
	return out;
}

ad::Var RecurrentStack::recurrent_forecast(ad::Tape& tape, ad::Var forecast_repr) const {
	return ad::linear(forecast_repr, tape.param(*output_proj_));
}

Rollout rollout(const RecurrentStack& stack, const Tensor& series, std::size_t horizon, Feedback feedback) {
	const ModelConfig& cfg = stack.config();
	const std::size_t B = cfg.backcast, D = cfg.dim;
	if (series.rank() != 2 || series.cols() != D) throw ShapeError("rollout series must be [len, D]");
	if (series.rows() < 1) throw DataError("rollout needs at least one observation");
	if (series.rows() < B) throw DataError("rollout series shorter than the backcast length");
	if (horizon < 1) throw std::invalid_argument("rollout horizon must be >= 1");
	if (feedback == Feedback::teacher && series.rows() < B + horizon - 1) {
		throw DataError("teacher rollout needs ground truth for the horizon");
	}
	ad::Tape tape(false);
	auto states = stack.initial_state(tape, 1);
	const StepContext ctx;
	Rollout result;
	auto row_of = [&](std::size_t t) {
		return Tensor(Shape{1, D}, std::vector<Real>(series.row(t).begin(), series.row(t).end()));
	};
	StackOutput last;
	for (std::size_t t = 0; t < B; ++t) last = stack.stack_step(tape, stack.project_input(tape, tape.constant(row_of(t))), states, ctx);
	for (std::size_t k = 0; k < horizon; ++k) {
		ad::Var pred = stack.recurrent_forecast(tape, last.forecast_repr);
		result.forecasts.push_back(pred.value().reshaped({D}));
		result.embeddings.push_back(last.embedding.value().reshaped({last.embedding.cols()}));
		std::vector<Tensor> layers;
		for (ad::Var q : last.layer_q) layers.push_back(stack.recurrent_forecast(tape, q).value().reshaped({D}));
		result.layers.push_back(std::move(layers));
		if (k + 1 == horizon) break;
		ad::Var next = feedback == Feedback::own ? ad::relu(pred) : tape.constant(row_of(B + k));
		last = stack.stack_step(tape, stack.project_input(tape, next), states, ctx);
	}
	return result;
}

std::vector<std::vector<Tensor>> decompose(const RecurrentStack& stack, const Tensor& series, std::size_t horizon) {
	Rollout r = rollout(stack, series, horizon, Feedback::own);
	const std::size_t L = stack.config().layers;
	std::vector<std::vector<Tensor>> out(L);
	for (std::size_t l = 0; l < L; ++l)
		for (std::size_t k = 0; k < horizon; ++k) out[l].push_back(r.layers[k][l]);
	return out;
}

} // namespace radflow
