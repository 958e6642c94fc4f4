#include "radflow/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "radflow/errors.hpp"
#include "radflow/io_util.hpp"

namespace radflow {

DynamicGraph::DynamicGraph(std::size_t nodes, std::size_t steps, const std::vector<Edge>& edges)
    : nodes_(nodes), steps_(steps), in_(nodes), out_degree_(nodes * steps, 0) {
	std::vector<Edge> sorted = edges;
	for (const Edge& e : sorted) {
		if (e.src >= nodes || e.dst >= nodes) {
			throw DataError("edge " + std::to_string(e.src) + " -> " + std::to_string(e.dst) + " names a node outside [0, " +
			                std::to_string(nodes) + ")");
		}
		if (e.start >= e.end || e.end > steps) {
			throw DataError("edge " + std::to_string(e.src) + " -> " + std::to_string(e.dst) + " has interval [" +
			                std::to_string(e.start) + ", " + std::to_string(e.end) + ") outside [0, " +
			                std::to_string(steps) + ")");
		}
	}
	std::sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) {
		return std::tie(a.dst, a.src, a.start, a.end) < std::tie(b.dst, b.src, b.start, b.end);
	});
	for (const Edge& e : sorted) {
		auto& links = in_[e.dst];
		if (links.empty() || links.back().src != e.src) links.push_back({e.src, {}});
		auto& iv = links.back().intervals;
		if (!iv.empty() && e.start <= iv.back().end) iv.back().end = std::max(iv.back().end, e.end);
		else iv.push_back({e.start, e.end});
	}
	// out-degree by difference arrays over the merged intervals
	std::vector<std::int64_t> diff(steps + 1);
	std::vector<std::vector<Interval>> by_src(nodes);
	for (const auto& links : in_)
		for (const auto& link : links)
			for (const auto& iv : link.intervals) by_src[link.src].push_back(iv);
	for (NodeId src = 0; src < nodes; ++src) {
		if (by_src[src].empty()) continue;
		std::fill(diff.begin(), diff.end(), 0);
		for (const auto& iv : by_src[src]) {
			++diff[iv.start];
			--diff[iv.end];
		}
		std::int64_t running = 0;
		for (std::size_t t = 0; t < steps; ++t) {
			running += diff[t];
			out_degree_[src * steps + t] = static_cast<std::uint32_t>(running);
		}
	}
}

void DynamicGraph::check_node(NodeId node) const {
	if (node >= nodes_) throw DataError("node " + std::to_string(node) + " outside [0, " + std::to_string(nodes_) + ")");
}

void DynamicGraph::check_step(std::size_t t) const {
	if (t >= steps_) throw DataError("step " + std::to_string(t) + " outside [0, " + std::to_string(steps_) + ")");
}

namespace {

bool covers(const std::vector<Interval>& intervals, std::size_t t) {
	auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
	                           [](std::size_t v, const Interval& iv) { return v < iv.start; });
	return it != intervals.begin() && t < std::prev(it)->end;
}

} // namespace

std::vector<NodeId> DynamicGraph::neighbors_at(NodeId node, std::size_t t) const {
	check_node(node);
	check_step(t);
	std::vector<NodeId> out;
	for (const auto& link : in_[node])
		if (covers(link.intervals, t)) out.push_back(link.src);
	return out;
}

const DynamicGraph::InLink* DynamicGraph::find_link(NodeId src, NodeId dst) const {
	check_node(src);
	check_node(dst);
	const auto& links = in_[dst];
	auto it = std::lower_bound(links.begin(), links.end(), src, [](const InLink& l, NodeId s) { return l.src < s; });
	return it != links.end() && it->src == src ? &*it : nullptr;
}

bool DynamicGraph::has_edge(NodeId src, NodeId dst, std::size_t t) const {
	check_step(t);
	const InLink* link = find_link(src, dst);
	return link && covers(link->intervals, t);
}

std::vector<NodeId> DynamicGraph::in_neighbors_ever(NodeId node) const {
	check_node(node);
	std::vector<NodeId> out;
	for (const auto& link : in_[node]) out.push_back(link.src);
	return out;
}

std::size_t DynamicGraph::presence(NodeId src, NodeId dst, std::size_t t0, std::size_t t1) const {
	const InLink* link = find_link(src, dst);
	if (!link) return 0;
	std::size_t total = 0;
	for (const auto& iv : link->intervals) {
		const std::size_t lo = std::max(iv.start, t0), hi = std::min(iv.end, t1);
		if (lo < hi) total += hi - lo;
	}
	return total;
}

std::vector<Edge> DynamicGraph::edges() const {
	std::vector<Edge> out;
	for (NodeId dst = 0; dst < nodes_; ++dst)
		for (const auto& link : in_[dst])
			for (const auto& iv : link.intervals) out.push_back({link.src, dst, iv.start, iv.end});
	return out;
}

std::size_t DynamicGraph::edge_count() const {
	std::size_t n = 0;
	for (const auto& links : in_)
		for (const auto& link : links) n += link.intervals.size();
	return n;
}

double importance_score(const SeriesPanel& panel, const DynamicGraph& graph, NodeId node, std::size_t t) {
	return panel.total(node, t) / (static_cast<double>(graph.out_degree(node, t)) + 1.0);
}

std::vector<NodeId> prune_bottom_decile(const SeriesPanel& panel, const DynamicGraph& graph, NodeId ego,
                                        std::size_t t) {
	std::vector<NodeId> nbrs = graph.neighbors_at(ego, t);
	if (nbrs.size() < 2) return nbrs;
	std::vector<double> scores(nbrs.size());
	for (std::size_t i = 0; i < nbrs.size(); ++i) scores[i] = importance_score(panel, graph, nbrs[i], t);
	// A neighbour is in the bottom decile when its rank is at most n / 10, so
	// fewer than ten neighbours are never pruned; ties with the threshold survive.
	std::vector<double> sorted = scores;
	std::sort(sorted.begin(), sorted.end());
	const std::size_t cut = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(nbrs.size()) + 1e-12));
	const double threshold = sorted[std::min(cut, sorted.size() - 1)];
	std::vector<NodeId> kept;
	for (std::size_t i = 0; i < nbrs.size(); ++i)
		if (scores[i] >= threshold) kept.push_back(nbrs[i]);
	return kept;
}

NeighborSample pruned_presence(const SeriesPanel& panel, const DynamicGraph& graph, NodeId ego, std::size_t start,
                               std::size_t end) {
	if (start > end || end > graph.steps()) throw DataError("window outside the graph's time range");
	const std::vector<NodeId> ever = graph.in_neighbors_ever(ego);
	std::vector<std::size_t> counts(ever.size(), 0);
	for (std::size_t t = start; t < end && !ever.empty(); ++t) {
		for (NodeId id : prune_bottom_decile(panel, graph, ego, t)) {
			++counts[std::lower_bound(ever.begin(), ever.end(), id) - ever.begin()];
		}
	}
	NeighborSample out{ego, start, end, {}, {}};
	for (std::size_t i = 0; i < ever.size(); ++i) {
		if (counts[i] == 0) continue;
		out.ids.push_back(ever[i]);
		out.counts.push_back(counts[i]);
	}
	return out;
}

NeighborSample sample_from_counts(const NeighborSample& candidates, std::size_t k, Rng& rng) {
	NeighborSample out{candidates.ego, candidates.start, candidates.end, {}, {}};
	std::vector<std::size_t> pool;
	for (std::size_t i = 0; i < candidates.ids.size(); ++i)
		if (candidates.counts[i] > 0) pool.push_back(i);
	if (pool.size() <= k) {
		for (std::size_t i : pool) {
			out.ids.push_back(candidates.ids[i]);
			out.counts.push_back(candidates.counts[i]);
		}
		return out;
	}
	std::vector<std::size_t> chosen;
	for (std::size_t draw = 0; draw < k; ++draw) {
		std::size_t total = 0;
		for (std::size_t i : pool) total += candidates.counts[i];
		std::uint64_t r = uniform_index(rng, total);
		std::size_t pick = 0;
		while (r >= candidates.counts[pool[pick]]) r -= candidates.counts[pool[pick++]];
		chosen.push_back(pool[pick]);
		pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
	}
	std::sort(chosen.begin(), chosen.end());
	for (std::size_t i : chosen) {
		out.ids.push_back(candidates.ids[i]);
		out.counts.push_back(candidates.counts[i]);
	}
	return out;
}

NeighborSample sample_train_neighbors(const SeriesPanel& panel, const DynamicGraph& graph, NodeId ego,
                                      std::size_t start, std::size_t end, std::size_t k, Rng& rng) {
	return sample_from_counts(pruned_presence(panel, graph, ego, start, end), k, rng);
}

std::size_t eval_neighbor_cap(std::size_t hops) { return hops >= 2 ? 8 : 16; }

NeighborSample top_neighbors_eval(const SeriesPanel& panel, const DynamicGraph& graph, NodeId ego, std::size_t start,
                                  std::size_t end, std::size_t hops) {
	NeighborSample all = pruned_presence(panel, graph, ego, start, end);
	std::vector<std::size_t> order(all.ids.size());
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return all.counts[a] > all.counts[b]; });
	order.resize(std::min(order.size(), eval_neighbor_cap(hops)));
	std::sort(order.begin(), order.end());
	NeighborSample out{ego, start, end, {}, {}};
	for (std::size_t i : order) {
		out.ids.push_back(all.ids[i]);
		out.counts.push_back(all.counts[i]);
	}
	return out;
}

void save_edges(const std::filesystem::path& path, const std::vector<Edge>& edges) {
	std::string text;
	for (const Edge& e : edges)
		text += std::to_string(e.src) + ' ' + std::to_string(e.dst) + ' ' + std::to_string(e.start) + ' ' +
		        std::to_string(e.end) + '\n';
	io::write_atomic(path, text);
}

std::vector<Edge> load_edge_list(const std::filesystem::path& path, std::size_t nodes, std::size_t steps) {
	std::istringstream in(io::read_file(path));
	std::vector<Edge> edges;
	std::string line;
	std::size_t lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		if (line.empty() || line[0] == '#') continue;
		std::istringstream fields(line);
		long long src, dst, start, end;
		std::string extra;
		if (!(fields >> src >> dst >> start >> end) || (fields >> extra)) {
			throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'src dst start end'");
		}
		if (src < 0 || dst < 0 || static_cast<std::size_t>(std::max(src, dst)) >= nodes) {
			throw FormatError(path.string() + ":" + std::to_string(lineno) + ": node id out of range");
		}
		if (start < 0 || end <= start || static_cast<std::size_t>(end) > steps) {
			throw FormatError(path.string() + ":" + std::to_string(lineno) + ": interval out of range");
		}
		edges.push_back({static_cast<NodeId>(src), static_cast<NodeId>(dst), static_cast<std::size_t>(start),
		                 static_cast<std::size_t>(end)});
	}
	return edges;
}

DynamicGraph load_edges(const std::filesystem::path& path, std::size_t nodes, std::size_t steps) {
	return DynamicGraph(nodes, steps, load_edge_list(path, nodes, steps));
}

} // namespace radflow
