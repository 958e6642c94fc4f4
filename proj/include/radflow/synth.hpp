#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "radflow/graph.hpp"
#include "radflow/panel.hpp"

namespace radflow {

struct SynthConfig {
	std::size_t nodes = 200;
	std::size_t steps = 500;
	std::size_t period = 7;
	double amplitude = 0.3;    // seasonal swing relative to the node level
	double trend = 0.2;        // slopes drawn from [-trend, trend], relative change over the whole series
	double noise = 0.1;        // innovation sd of the AR(1) noise, relative to the level
	double noise_ar = 0.6;     // AR(1) coefficient of the noise
	double gamma = 0.5;        // influence strength
	double density = 4;        // expected in-degree
	double churn = 0;          // per-step probability that an edge switches on or off
	double level_min = 10, level_max = 1000;
	std::uint64_t seed = 0;

	void validate() const; // throws ConfigError
	bool operator==(const SynthConfig&) const = default;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

struct SynthData {
	SeriesPanel base;   // series before diffusion
	SeriesPanel panel;  // observed series
	DynamicGraph graph;
	// influence[src * N + dst] = gamma * mean over t of a_t(src, dst) / |N_t(dst)|
	std::vector<double> influence;
};

// v_j(t) = base_j(t) + gamma * mean of base_i(t) over in-neighbours i present at t.
// A single pass, so the result is closed-form in the base series.
SeriesPanel diffuse(const SeriesPanel& base, const DynamicGraph& graph, double gamma);

std::vector<double> influence_matrix(const DynamicGraph& graph, double gamma);

SynthData generate(const SynthConfig& config);

} // namespace radflow
