#include "radflow/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "radflow/errors.hpp"
#include "radflow/io_util.hpp"

namespace radflow {

RadflowModel::RadflowModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
	config_.validate();
	Rng recurrent_rng = derive_rng(seed, 0);
	RecurrentStack::register_parameters(params_, config_, recurrent_rng);
	if (config_.hops > 0) {
		Rng agg_rng = derive_rng(seed, 1);
		FlowAggregator::register_parameters(params_, config_, agg_rng);
	}
	bind();
}

RadflowModel::RadflowModel(ModelConfig config, ad::ParameterSet params) : config_(std::move(config)) {
	config_.validate();
	RadflowModel reference(config_, 0);
	if (reference.params_.size() != params.size()) {
		throw ConfigError("checkpoint has " + std::to_string(params.size()) + " tensors, config expects " +
		                  std::to_string(reference.params_.size()));
	}
	for (std::size_t i = 0; i < reference.params_.size(); ++i) {
		const ad::Parameter& want = reference.params_[i];
		const ad::Parameter* got = params.find(want.name);
		if (!got) throw ConfigError("checkpoint is missing tensor " + want.name);
		if (got->value.shape() != want.value.shape()) {
			throw ConfigError("tensor " + want.name + " has shape " + shape_string(got->value.shape()) + ", expected " +
			                  shape_string(want.value.shape()));
		}
		params_.add(want.name, got->value);
	}
	bind();
}

RadflowModel::RadflowModel(const RadflowModel& other) : config_(other.config_), params_(other.params_) {
	bind();
}

RadflowModel& RadflowModel::operator=(const RadflowModel& other) {
	if (this != &other) {
		config_ = other.config_;
		params_ = other.params_;
		bind();
	}
	return *this;
}

RadflowModel without_network(const RadflowModel& model) {
	ModelConfig config = model.config();
	config.hops = 0;
	ad::ParameterSet params;
	for (std::size_t i = 0; i < model.parameters().size(); ++i) {
		const ad::Parameter& p = model.parameters()[i];
		if (p.name.rfind("agg.", 0) != 0) params.add(p.name, p.value);
	}
	return RadflowModel(config, std::move(params));
}

void RadflowModel::bind() {
	stack_.emplace(params_, config_);
	if (config_.hops > 0) aggregator_.emplace(params_, config_);
	else aggregator_.reset();
}

std::vector<ad::Var> RadflowModel::neighbor_embeddings(ad::Tape& tape, const NeighborLevel& level,
                                                       const StepContext& ctx) const {
	const std::size_t B = config_.backcast, F = config_.horizon;
	if (level.series.steps.size() < B + F) throw ShapeError("neighbour series shorter than backcast + horizon");
	auto states = stack_->initial_state(tape, level.series.rows);
	std::vector<ad::Var> out;
	out.reserve(F);
	for (std::size_t t = 0; t < B + F; ++t) {
		StackOutput o =
		    stack_->stack_step(tape, stack_->project_input(tape, tape.constant(level.series.steps[t])), states, ctx);
		if (t >= B) out.push_back(o.embedding);
	}
	return out;
}

namespace {

std::vector<std::uint8_t> any_present(const std::vector<std::uint8_t>& present, std::size_t slots) {
	const std::size_t n = slots ? present.size() / slots : 0;
	std::vector<std::uint8_t> any(n, 0);
	for (std::size_t b = 0; b < n; ++b)
		for (std::size_t s = 0; s < slots; ++s) any[b] |= present[b * slots + s];
	return any;
}

std::vector<Real> as_weights(const std::vector<std::uint8_t>& flags) {
	return {flags.begin(), flags.end()};
}

} // namespace

ForwardResult RadflowModel::forward(ad::Tape& tape, const Episode& episode, const ForwardOptions& options) const {
	const std::size_t B = config_.backcast, F = config_.horizon, n = episode.ego.rows;
	if (episode.ego.steps.size() < B + (options.ego_feedback == Feedback::teacher ? F - 1 : 0)) {
		throw ShapeError("ego series shorter than the window");
	}
	const StepContext ctx{options.train, options.rng};

	const bool use_network = config_.hops > 0 && episode.hop1 && episode.hop1->slots > 0;
	std::vector<ad::Var> keys; // per horizon step, [n * slots, E]
	if (use_network) {
		const NeighborLevel& hop1 = *episode.hop1;
		keys = neighbor_embeddings(tape, hop1, ctx);
		if (config_.hops == 2 && episode.hop2 && episode.hop2->slots > 0) {
			const NeighborLevel& hop2 = *episode.hop2;
			std::vector<ad::Var> second = neighbor_embeddings(tape, hop2, ctx);
			for (std::size_t k = 0; k < F; ++k) {
				AggregateResult inner = aggregator_->aggregate(tape, keys[k], second[k], hop2.present[k], hop2.slots);
				ad::Var agg = ad::mul_rows(inner.aggregate, as_weights(any_present(hop2.present[k], hop2.slots)));
				keys[k] = aggregator_->combine_ego(tape, keys[k], agg);
			}
		} else if (config_.hops == 2) {
			for (std::size_t k = 0; k < F; ++k) {
				ad::Var zero = tape.constant(Tensor(Shape{keys[k].rows(), keys[k].cols()}, Real{0}));
				keys[k] = aggregator_->combine_ego(tape, keys[k], zero);
			}
		}
	}

	auto states = stack_->initial_state(tape, n);
	StackOutput last;
	for (std::size_t t = 0; t < B; ++t) {
		last = stack_->stack_step(tape, stack_->project_input(tape, tape.constant(episode.ego.steps[t])), states, ctx);
	}
	ForwardResult result;
	result.steps.reserve(F);
	for (std::size_t k = 0; k < F; ++k) {
		StepOutput step;
		step.recurrent = stack_->recurrent_forecast(tape, last.forecast_repr);
		step.prediction = step.recurrent;
		if (options.keep_layers) {
			for (ad::Var q : last.layer_q) step.layers.push_back(stack_->recurrent_forecast(tape, q).value());
		}
		if (use_network) {
			const NeighborLevel& hop1 = *episode.hop1;
			AggregateResult agg = aggregator_->aggregate(tape, last.embedding, keys[k], hop1.present[k], hop1.slots);
			ad::Var combined = aggregator_->combine_ego(tape, last.embedding, agg.aggregate);
			step.has_neighbors = any_present(hop1.present[k], hop1.slots);
			step.network = ad::mul_rows(aggregator_->network_forecast(tape, combined), as_weights(step.has_neighbors));
			step.prediction = combine_forecast(step.recurrent, step.network);
			step.attention = std::move(agg.weights);
		} else {
			step.has_neighbors.assign(n, 0);
		}
		if (k + 1 < F) {
			ad::Var next = options.ego_feedback == Feedback::own ? ad::relu(step.prediction)
			                                                     : tape.constant(episode.ego.steps[B + k]);
			last = stack_->stack_step(tape, stack_->project_input(tape, next), states, ctx);
		}
		result.steps.push_back(std::move(step));
	}
	return result;
}

// ---- checkpoint container ---------------------------------------------------

namespace {
constexpr char kCheckpointMagic[12] = {'R', 'A', 'D', 'F', 'L', 'O', 'W', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;
} // namespace

void save_checkpoint(const std::filesystem::path& path, const RadflowModel& model) {
	std::string blob;
	blob.append(kCheckpointMagic, sizeof(kCheckpointMagic));
	io::put_u32(blob, kCheckpointVersion);
	const std::string config = nlohmann::json(model.config()).dump();
	io::put_u64(blob, config.size());
	blob += config;
	const auto& params = model.parameters();
	io::put_u64(blob, params.size());
	for (std::size_t i = 0; i < params.size(); ++i) {
		const ad::Parameter& p = params[i];
		io::put_u64(blob, p.name.size());
		blob += p.name;
		io::put_u64(blob, p.value.rank());
		for (std::size_t d : p.value.shape()) io::put_u64(blob, d);
		for (Real v : p.value.values()) io::put_f64(blob, static_cast<double>(v));
	}
	io::write_atomic(path, blob);
}

RadflowModel load_checkpoint(const std::filesystem::path& path) {
	const std::string blob = io::read_file(path);
	io::Reader in(blob, path.string());
	if (in.bytes(sizeof(kCheckpointMagic)) != std::string_view(kCheckpointMagic, sizeof(kCheckpointMagic))) {
		throw FormatError(path.string() + ": not a checkpoint (bad magic)");
	}
	if (const auto version = in.u32(); version != kCheckpointVersion) {
		throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
	}
	ModelConfig config;
	try {
		config = nlohmann::json::parse(in.bytes(in.u64())).get<ModelConfig>();
	} catch (const nlohmann::json::exception& e) {
		throw FormatError(path.string() + ": bad config block: " + e.what());
	}
	ad::ParameterSet params;
	const std::uint64_t count = in.u64();
	for (std::uint64_t i = 0; i < count; ++i) {
		std::string name(in.bytes(in.u64()));
		const std::uint64_t rank = in.u64();
		if (rank > 8) throw FormatError(path.string() + ": implausible tensor rank");
		Shape shape(rank);
		std::uint64_t count_values = 1;
		for (auto& d : shape) {
			d = in.u64();
			if (d != 0 && count_values > (blob.size() / 8) / d) throw FormatError(path.string() + ": truncated payload");
			count_values *= d;
		}
		Tensor value(shape);
		for (Real& v : value.values()) v = static_cast<Real>(in.f64());
		params.add(std::move(name), std::move(value));
	}
	if (!in.at_end()) throw FormatError(path.string() + ": trailing bytes after checkpoint payload");
	return RadflowModel(config, std::move(params));
}

} // namespace radflow
