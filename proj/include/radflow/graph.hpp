#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "radflow/panel.hpp"
#include "radflow/random.hpp"

namespace radflow {

using NodeId = std::uint32_t;

// A directed edge present over the half-open step interval [start, end).
struct Edge {
	NodeId src = 0;
	NodeId dst = 0;
	std::size_t start = 0;
	std::size_t end = 0;
	bool operator==(const Edge&) const = default;
};

struct Interval {
	std::size_t start, end;
};

// Time-indexed directed graph. Overlapping or touching intervals for the same
// (src, dst) pair are merged on construction.
class DynamicGraph {
public:
	DynamicGraph() = default;
	DynamicGraph(std::size_t nodes, std::size_t steps, const std::vector<Edge>& edges);

	std::size_t nodes() const { return nodes_; }
	std::size_t steps() const { return steps_; }

	// In-neighbours of `node` at step t in ascending id order.
	std::vector<NodeId> neighbors_at(NodeId node, std::size_t t) const;
	bool has_edge(NodeId src, NodeId dst, std::size_t t) const;
	std::size_t out_degree(NodeId node, std::size_t t) const { return out_degree_[node * steps_ + t]; }
	// Every node that links to `node` at some step, ascending.
	std::vector<NodeId> in_neighbors_ever(NodeId node) const;
	// Steps in [t0, t1) where src -> dst is present.
	std::size_t presence(NodeId src, NodeId dst, std::size_t t0, std::size_t t1) const;

	// Merged edge list, sorted by (dst, src, start).
	std::vector<Edge> edges() const;
	std::size_t edge_count() const;

private:
	struct InLink {
		NodeId src;
		std::vector<Interval> intervals; // sorted, disjoint, non-adjacent
	};
	const InLink* find_link(NodeId src, NodeId dst) const;
	void check_node(NodeId node) const;
	void check_step(std::size_t t) const;

	std::size_t nodes_ = 0, steps_ = 0;
	std::vector<std::vector<InLink>> in_; // per destination, sorted by src
	std::vector<std::uint32_t> out_degree_;
};

// Total raw value at t divided by (out-degree at t + 1). `panel` should be
// forward-filled.
double importance_score(const SeriesPanel& panel, const DynamicGraph& graph, NodeId node, std::size_t t);

// Drops neighbours scoring strictly below the nearest-rank 10th percentile
// of the scores at t. Ties with the threshold are kept.
std::vector<NodeId> prune_bottom_decile(const SeriesPanel& panel, const DynamicGraph& graph, NodeId ego,
                                        std::size_t t);

struct NeighborSample {
	NodeId ego = 0;
	std::size_t start = 0, end = 0;
	std::vector<NodeId> ids;
	std::vector<std::size_t> counts; // presence after pruning, per chosen id
};

// Candidates with their pruned presence counts over [start, end), ascending id.
NeighborSample pruned_presence(const SeriesPanel& panel, const DynamicGraph& graph, NodeId ego, std::size_t start,
                               std::size_t end);

// Up to k distinct neighbours drawn without replacement with probability
// proportional to pruned presence counts over the window.
NeighborSample sample_train_neighbors(const SeriesPanel& panel, const DynamicGraph& graph, NodeId ego,
                                      std::size_t start, std::size_t end, std::size_t k, Rng& rng);

// Weighted draw without replacement from precomputed counts.
NeighborSample sample_from_counts(const NeighborSample& candidates, std::size_t k, Rng& rng);

// The 16 (one hop) or 8 (two hops) most present neighbours, ties by id.
NeighborSample top_neighbors_eval(const SeriesPanel& panel, const DynamicGraph& graph, NodeId ego, std::size_t start,
                                  std::size_t end, std::size_t hops);
std::size_t eval_neighbor_cap(std::size_t hops);

// Line format: "src dst start end" per edge.
void save_edges(const std::filesystem::path& path, const std::vector<Edge>& edges);
std::vector<Edge> load_edge_list(const std::filesystem::path& path, std::size_t nodes, std::size_t steps);
DynamicGraph load_edges(const std::filesystem::path& path, std::size_t nodes, std::size_t steps);

} // namespace radflow
