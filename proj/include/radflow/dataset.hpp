#pragma once

#include <map>
#include <string>
#include <vector>

#include "radflow/graph.hpp"
#include "radflow/model.hpp"
#include "radflow/panel.hpp"

namespace radflow {

enum class Setting { imputation, forecast };
std::string to_string(Setting s);
Setting parse_setting(const std::string& text);

// A panel plus its graph, with the forward-filled copy every model reads.
struct Dataset {
	SeriesPanel raw;
	SeriesPanel filled;
	DynamicGraph graph;

	Dataset() = default;
	Dataset(SeriesPanel raw_panel, DynamicGraph dynamic_graph);

	std::size_t nodes() const { return filled.nodes(); }
	std::size_t steps() const { return filled.steps(); }
	std::size_t dim() const { return filled.dim(); }
	double log_value(std::size_t node, std::size_t t, std::size_t d) const { return to_log(filled.value(node, t, d)); }
};

// The ego window [start, start + B + F); forecasts cover [start + B, start + B + F).
struct WindowRef {
	NodeId ego = 0;
	std::size_t start = 0;
	bool operator==(const WindowRef&) const = default;
};

// Horizon forecasts of a pure time series model, used as neighbour inputs in
// the forecast setting. Computed lazily and cached per (node, window start).
class NeighborForecasts {
public:
	NeighborForecasts(const RadflowModel& base, const Dataset& data);
	// F x D log-space forecasts for the window starting at `start`.
	const std::vector<double>& get(NodeId node, std::size_t start);
	std::size_t cached() const { return cache_.size(); }

private:
	const RadflowModel& base_;
	const Dataset& data_;
	std::map<std::pair<NodeId, std::size_t>, std::vector<double>> cache_;
};

struct EpisodeOptions {
	bool train_sampling = false; // weighted draw of k neighbours, else the top-ranked ones
	std::size_t k = 4;
	Rng* rng = nullptr;
	Setting setting = Setting::imputation;
	NeighborForecasts* forecasts = nullptr; // required for the forecast setting
};

struct BuiltEpisode {
	Episode episode;
	std::vector<Tensor> truth;          // per horizon step, [n, D] on the raw scale
	std::vector<NeighborSample> chosen; // hop-1 neighbours per ego
};

// Assembles model inputs for a batch of windows. Neighbours are selected
// from presence over the backcast; the ego itself is never its own neighbour
// at either hop. Horizon presence flags follow the raw edge intervals.
BuiltEpisode build_episode(const Dataset& data, const ModelConfig& config, const std::vector<WindowRef>& windows,
                           const EpisodeOptions& options);

} // namespace radflow
