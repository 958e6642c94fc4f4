#include "radflow/synth.hpp"

#include <cmath>
#include <numbers>

#include "radflow/errors.hpp"
#include "radflow/random.hpp"

namespace radflow {

void SynthConfig::validate() const {
	if (nodes < 1 || steps < 1) throw ConfigError("synth needs at least one node and one step");
	if (period < 1) throw ConfigError("period must be >= 1");
	if (!(gamma >= 0 && gamma < 1)) throw ConfigError("gamma must lie in [0, 1)");
	if (!(churn >= 0 && churn <= 1)) throw ConfigError("churn must lie in [0, 1]");
	if (!(density >= 0)) throw ConfigError("density must be non-negative");
	if (!(noise >= 0) || !(amplitude >= 0) || !(trend >= 0)) throw ConfigError("noise, amplitude and trend must be >= 0");
	if (!(std::abs(noise_ar) < 1)) throw ConfigError("noise_ar must lie in (-1, 1)");
	if (!(level_min > 0 && level_max >= level_min)) throw ConfigError("levels need 0 < level_min <= level_max");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
	j = nlohmann::json{{"nodes", c.nodes},         {"steps", c.steps},       {"period", c.period},
	                   {"amplitude", c.amplitude}, {"trend", c.trend},       {"noise", c.noise},
	                   {"noise_ar", c.noise_ar},   {"gamma", c.gamma},       {"density", c.density},
	                   {"churn", c.churn},         {"level_min", c.level_min}, {"level_max", c.level_max},
	                   {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
	c.nodes = j.at("nodes").get<std::size_t>();
	c.steps = j.at("steps").get<std::size_t>();
	c.period = j.at("period").get<std::size_t>();
	c.amplitude = j.at("amplitude").get<double>();
	c.trend = j.at("trend").get<double>();
	c.noise = j.at("noise").get<double>();
	c.noise_ar = j.at("noise_ar").get<double>();
	c.gamma = j.at("gamma").get<double>();
	c.density = j.at("density").get<double>();
	c.churn = j.at("churn").get<double>();
	c.level_min = j.at("level_min").get<double>();
	c.level_max = j.at("level_max").get<double>();
	c.seed = j.at("seed").get<std::uint64_t>();
}

SeriesPanel diffuse(const SeriesPanel& base, const DynamicGraph& graph, double gamma) {
	if (graph.nodes() != base.nodes() || graph.steps() != base.steps()) throw DataError("graph does not match the panel");
	SeriesPanel out = base;
	for (std::size_t t = 0; t < base.steps(); ++t) {
		for (NodeId j = 0; j < base.nodes(); ++j) {
			const auto nbrs = graph.neighbors_at(j, t);
			if (nbrs.empty()) continue;
			for (std::size_t d = 0; d < base.dim(); ++d) {
				double sum = 0;
				for (NodeId i : nbrs) sum += base.value(i, t, d);
				out.value(j, t, d) = static_cast<float>(base.value(j, t, d) + gamma * sum / static_cast<double>(nbrs.size()));
			}
		}
	}
	return out;
}

std::vector<double> influence_matrix(const DynamicGraph& graph, double gamma) {
	const std::size_t N = graph.nodes(), T = graph.steps();
	std::vector<double> m(N * N, 0.0);
	for (std::size_t t = 0; t < T; ++t) {
		for (NodeId j = 0; j < N; ++j) {
			const auto nbrs = graph.neighbors_at(j, t);
			for (NodeId i : nbrs) m[i * N + j] += gamma / static_cast<double>(nbrs.size()) / static_cast<double>(T);
		}
	}
	return m;
}

namespace {

// Edges of one ordered pair: a two-state chain starting switched on, flipping
// with probability `churn` at every step.
void pair_intervals(NodeId src, NodeId dst, std::size_t steps, double churn, Rng& rng, std::vector<Edge>& out) {
	bool on = true;
	std::size_t since = 0;
	for (std::size_t t = 1; t < steps; ++t) {
		if (churn > 0 && uniform01(rng) < churn) {
			if (on) out.push_back({src, dst, since, t});
			on = !on;
			since = t;
		}
	}
	if (on) out.push_back({src, dst, since, steps});
}

} // namespace

SynthData generate(const SynthConfig& config) {
	config.validate();
	const std::size_t N = config.nodes, T = config.steps;
	Rng series_rng = derive_rng(config.seed, 100);
	Rng graph_rng = derive_rng(config.seed, 101);

	SeriesPanel base(N, T, 1);
	const double log_lo = std::log(config.level_min), log_hi = std::log(config.level_max);
	for (std::size_t n = 0; n < N; ++n) {
		const double level = std::exp(uniform(series_rng, log_lo, log_hi));
		const double phase = uniform(series_rng, 0, 2 * std::numbers::pi);
		const double slope = uniform(series_rng, -config.trend, config.trend);
		double ar = 0;
		for (std::size_t t = 0; t < T; ++t) {
			ar = config.noise_ar * ar + config.noise * standard_normal(series_rng);
			const double season =
			    config.amplitude * std::sin(2 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(config.period) + phase);
			const double shape = 1 + season + slope * static_cast<double>(t) / static_cast<double>(T) + ar;
			base.value(n, t) = static_cast<float>(level * std::max(0.0, shape));
		}
	}

	std::vector<Edge> edges;
	if (N > 1) {
		const double p = std::min(1.0, config.density / static_cast<double>(N - 1));
		for (NodeId dst = 0; dst < N; ++dst) {
			for (NodeId src = 0; src < N; ++src) {
				if (src == dst || uniform01(graph_rng) >= p) continue;
				pair_intervals(src, dst, T, config.churn, graph_rng, edges);
			}
		}
	}
	DynamicGraph graph(N, T, edges);
	SeriesPanel panel = diffuse(base, graph, config.gamma);
	std::vector<double> influence = influence_matrix(graph, config.gamma);
	return {std::move(base), std::move(panel), std::move(graph), std::move(influence)};
}

} // namespace radflow
