#include "radflow/dataset.hpp"

#include <algorithm>

#include "radflow/errors.hpp"

namespace radflow {

std::string to_string(Setting s) { return s == Setting::imputation ? "imputation" : "forecast"; }

Setting parse_setting(const std::string& text) {
	if (text == "imputation") return Setting::imputation;
	if (text == "forecast") return Setting::forecast;
	throw ConfigError("unknown setting '" + text + "' (expected imputation or forecast)");
}

Dataset::Dataset(SeriesPanel raw_panel, DynamicGraph dynamic_graph)
    : raw(std::move(raw_panel)), filled(forward_fill(raw)), graph(std::move(dynamic_graph)) {
	if (graph.nodes() != raw.nodes() || graph.steps() != raw.steps()) {
		throw DataError("graph covers " + std::to_string(graph.nodes()) + " nodes x " + std::to_string(graph.steps()) +
		                " steps but the panel has " + std::to_string(raw.nodes()) + " x " + std::to_string(raw.steps()));
	}
}

NeighborForecasts::NeighborForecasts(const RadflowModel& base, const Dataset& data) : base_(base), data_(data) {
	if (base.config().hops != 0) throw ConfigError("neighbour forecasts need a model without network inputs");
	if (base.config().dim != data.dim()) throw ConfigError("forecast model dimension does not match the data");
}

const std::vector<double>& NeighborForecasts::get(NodeId node, std::size_t start) {
	auto key = std::make_pair(node, start);
	if (auto it = cache_.find(key); it != cache_.end()) return it->second;
	const std::size_t B = base_.config().backcast, F = base_.config().horizon, D = data_.dim();
	Tensor series(Shape{B, D});
	for (std::size_t t = 0; t < B; ++t)
		for (std::size_t d = 0; d < D; ++d) series.at(t, d) = static_cast<Real>(data_.log_value(node, start + t, d));
	Rollout r = rollout(base_.stack(), series, F, Feedback::own);
	std::vector<double> out(F * D);
	for (std::size_t k = 0; k < F; ++k)
		for (std::size_t d = 0; d < D; ++d) out[k * D + d] = std::max(0.0, static_cast<double>(r.forecasts[k][d]));
	return cache_.emplace(key, std::move(out)).first->second;
}

namespace {

struct LevelPlan {
	std::vector<std::int64_t> node; // per row, -1 for padding
	std::vector<std::size_t> start; // window start per row
	std::size_t slots = 0;
};

// Rows for the neighbours of each parent; parents with fewer get padding.
LevelPlan plan_level(const Dataset& data, const ModelConfig& config, const std::vector<std::int64_t>& parents,
                     const std::vector<std::size_t>& starts, const std::vector<NodeId>& egos,
                     const EpisodeOptions& options, std::size_t hops_cap, std::vector<NeighborSample>* chosen) {
	const std::size_t B = config.backcast;
	std::vector<NeighborSample> picks(parents.size());
	std::size_t slots = 0;
	for (std::size_t p = 0; p < parents.size(); ++p) {
		if (parents[p] < 0) continue;
		const auto parent = static_cast<NodeId>(parents[p]);
		NeighborSample cand = pruned_presence(data.filled, data.graph, parent, starts[p], starts[p] + B);
		// drop the ego and the parent itself
		NeighborSample filtered{cand.ego, cand.start, cand.end, {}, {}};
		for (std::size_t i = 0; i < cand.ids.size(); ++i) {
			if (cand.ids[i] == egos[p] || cand.ids[i] == parent) continue;
			filtered.ids.push_back(cand.ids[i]);
			filtered.counts.push_back(cand.counts[i]);
		}
		if (options.train_sampling) {
			if (!options.rng) throw ConfigError("training neighbour sampling needs an rng");
			picks[p] = sample_from_counts(filtered, options.k, *options.rng);
		} else {
			std::vector<std::size_t> order(filtered.ids.size());
			for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
			std::stable_sort(order.begin(), order.end(),
			                 [&](std::size_t a, std::size_t b) { return filtered.counts[a] > filtered.counts[b]; });
			order.resize(std::min(order.size(), eval_neighbor_cap(hops_cap)));
			std::sort(order.begin(), order.end());
			NeighborSample top{filtered.ego, filtered.start, filtered.end, {}, {}};
			for (std::size_t i : order) {
				top.ids.push_back(filtered.ids[i]);
				top.counts.push_back(filtered.counts[i]);
			}
			picks[p] = std::move(top);
		}
		slots = std::max(slots, picks[p].ids.size());
	}
	LevelPlan plan;
	plan.slots = slots;
	for (std::size_t p = 0; p < parents.size(); ++p) {
		for (std::size_t s = 0; s < slots; ++s) {
			plan.node.push_back(s < picks[p].ids.size() ? static_cast<std::int64_t>(picks[p].ids[s]) : -1);
			plan.start.push_back(starts[p]);
		}
	}
	if (chosen) *chosen = std::move(picks);
	return plan;
}

NeighborLevel materialize(const Dataset& data, const ModelConfig& config, const LevelPlan& plan,
                          const std::vector<std::int64_t>& parents, const EpisodeOptions& options) {
	const std::size_t B = config.backcast, F = config.horizon, D = config.dim, rows = plan.node.size();
	NeighborLevel level;
	level.slots = plan.slots;
	level.ids = plan.node;
	level.series.rows = rows;
	level.series.steps.assign(B + F, Tensor(Shape{rows, D}, Real{0}));
	level.present.assign(F, std::vector<std::uint8_t>(rows, 0));
	for (std::size_t r = 0; r < rows; ++r) {
		if (plan.node[r] < 0) continue;
		const auto node = static_cast<NodeId>(plan.node[r]);
		const std::size_t start = plan.start[r];
		const std::vector<double>* fc = nullptr;
		if (options.setting == Setting::forecast) {
			if (!options.forecasts) throw ConfigError("the forecast setting needs neighbour forecasts");
			fc = &options.forecasts->get(node, start);
		}
		for (std::size_t t = 0; t < B + F; ++t) {
			for (std::size_t d = 0; d < D; ++d) {
				const double v = t >= B && fc ? (*fc)[(t - B) * D + d] : data.log_value(node, start + t, d);
				level.series.steps[t].at(r, d) = static_cast<Real>(v);
			}
		}
		const auto parent = static_cast<NodeId>(parents[r / plan.slots]);
		for (std::size_t k = 0; k < F; ++k) level.present[k][r] = data.graph.has_edge(node, parent, start + B + k);
	}
	return level;
}

} // namespace

BuiltEpisode build_episode(const Dataset& data, const ModelConfig& config, const std::vector<WindowRef>& windows,
                           const EpisodeOptions& options) {
	const std::size_t B = config.backcast, F = config.horizon, D = config.dim, n = windows.size();
	if (D != data.dim()) throw ConfigError("model dimension " + std::to_string(D) + " does not match data dimension " +
	                                       std::to_string(data.dim()));
	for (const auto& w : windows) {
		if (w.ego >= data.nodes() || w.start + B + F > data.steps()) {
			throw DataError("window of node " + std::to_string(w.ego) + " at " + std::to_string(w.start) +
			                " runs past the data");
		}
	}
	BuiltEpisode out;
	Episode& ep = out.episode;
	ep.ego.rows = n;
	ep.ego.steps.assign(B + F, Tensor(Shape{n, D}, Real{0}));
	out.truth.assign(F, Tensor(Shape{n, D}, Real{0}));
	for (std::size_t b = 0; b < n; ++b) {
		ep.ego_ids.push_back(windows[b].ego);
		for (std::size_t t = 0; t < B + F; ++t)
			for (std::size_t d = 0; d < D; ++d)
				ep.ego.steps[t].at(b, d) = static_cast<Real>(data.log_value(windows[b].ego, windows[b].start + t, d));
		for (std::size_t k = 0; k < F; ++k)
			for (std::size_t d = 0; d < D; ++d)
				out.truth[k].at(b, d) = data.filled.value(windows[b].ego, windows[b].start + B + k, d);
	}
	if (config.hops == 0) return out;

	std::vector<std::int64_t> egos_as_parents;
	std::vector<std::size_t> starts;
	std::vector<NodeId> egos;
	for (const auto& w : windows) {
		egos_as_parents.push_back(w.ego);
		starts.push_back(w.start);
		egos.push_back(w.ego);
	}
	LevelPlan hop1 = plan_level(data, config, egos_as_parents, starts, egos, options, config.hops, &out.chosen);
	ep.hop1 = materialize(data, config, hop1, egos_as_parents, options);
	if (config.hops >= 2 && hop1.slots > 0) {
		std::vector<NodeId> root(hop1.node.size());
		for (std::size_t r = 0; r < root.size(); ++r) root[r] = egos[r / hop1.slots];
		LevelPlan hop2 = plan_level(data, config, hop1.node, hop1.start, root, options, config.hops, nullptr);
		ep.hop2 = materialize(data, config, hop2, hop1.node, options);
	}
	return out;
}

} // namespace radflow
