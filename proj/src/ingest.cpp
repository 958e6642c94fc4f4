#include "radflow/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <boost/tokenizer.hpp>

#include "radflow/errors.hpp"
#include "radflow/io_util.hpp"

namespace radflow {

void to_json(nlohmann::json& j, const IngestReport& r) {
	j = nlohmann::json{{"source", r.source},           {"nodes", r.nodes},       {"steps", r.steps},
	                   {"edges", r.edges},             {"step_minutes", r.step_minutes},
	                   {"missing_rate", r.missing_rate}};
}

namespace {

using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;

std::vector<std::string> split_csv(const std::string& line, const std::string& where) {
	std::string clean = line;
	if (!clean.empty() && clean.back() == '\r') clean.pop_back();
	try {
		Tokenizer tok(clean);
		return {tok.begin(), tok.end()};
	} catch (const boost::escaped_list_error& e) {
		throw FormatError(where + ": " + e.what());
	}
}

std::string trim(const std::string& s) {
	const auto b = s.find_first_not_of(" \t");
	if (b == std::string::npos) return "";
	return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

// false for a missing cell
bool parse_cell(const std::string& raw, double& out, const std::string& where) {
	const std::string s = trim(raw);
	if (s.empty() || s == "nan" || s == "NaN" || s == "NA") return false;
	const char* end = s.data() + s.size();
	auto [ptr, ec] = std::from_chars(s.data(), end, out);
	if (ec != std::errc() || ptr != end || !std::isfinite(out)) throw FormatError(where + ": bad number '" + s + "'");
	return true;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
	std::ifstream in(path);
	if (!in) throw DataError("cannot open " + path.string());
	std::vector<std::string> lines;
	for (std::string line; std::getline(in, line);) {
		if (trim(line).empty() || trim(line) == "\r") continue;
		lines.push_back(line);
	}
	return lines;
}

} // namespace

SeriesPanel read_wide_csv(const std::filesystem::path& path, bool header) {
	const auto lines = read_lines(path);
	const std::string name = path.filename().string();
	if (lines.size() < (header ? 2u : 1u)) throw FormatError(name + ": no data rows");
	std::vector<std::string> names;
	std::size_t first = 0;
	if (header) {
		for (const auto& c : split_csv(lines[0], name + ":1")) names.push_back(trim(c));
		first = 1;
	}
	const std::size_t N = header ? names.size() : split_csv(lines[0], name + ":1").size();
	if (N == 0) throw FormatError(name + ": no columns");
	const std::size_t T = lines.size() - first;
	SeriesPanel panel(N, T, 1);
	for (std::size_t t = 0; t < T; ++t) {
		const std::string where = name + ":" + std::to_string(t + first + 1);
		const auto cells = split_csv(lines[t + first], where);
		if (cells.size() != N) {
			throw FormatError(where + ": " + std::to_string(cells.size()) + " cells, expected " + std::to_string(N));
		}
		for (std::size_t n = 0; n < N; ++n) {
			double v = 0;
			if (parse_cell(cells[n], v, where)) panel.value(n, t) = static_cast<float>(v);
			else panel.set_missing(n, t, true);
		}
	}
	for (std::size_t n = 0; n < N; ++n) panel.meta()[n].name = header ? names[n] : std::to_string(n);
	return panel;
}

std::vector<Edge> read_adjacency_csv(const std::filesystem::path& path, std::size_t nodes, std::size_t steps) {
	const auto lines = read_lines(path);
	const std::string name = path.filename().string();
	if (lines.size() != nodes) {
		throw DataError(name + ": " + std::to_string(lines.size()) + " rows but the series have " +
		                std::to_string(nodes) + " nodes");
	}
	std::vector<Edge> edges;
	for (std::size_t i = 0; i < nodes; ++i) {
		const std::string where = name + ":" + std::to_string(i + 1);
		const auto cells = split_csv(lines[i], where);
		if (cells.size() != nodes) {
			throw DataError(where + ": " + std::to_string(cells.size()) + " columns, expected " + std::to_string(nodes));
		}
		for (std::size_t j = 0; j < nodes; ++j) {
			double w = 0;
			if (!parse_cell(cells[j], w, where)) throw FormatError(where + ": empty adjacency cell");
			if (w != 0 && i != j) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 0, steps});
		}
	}
	return edges;
}

IngestedData ingest(const std::string& source, const std::filesystem::path& series, const std::filesystem::path& links) {
	IngestedData out;
	out.report.source = source;
	if (source == "losloop" || source == "sztaxi") {
		out.panel = read_wide_csv(series, true);
		out.edges = read_adjacency_csv(links, out.panel.nodes(), out.panel.steps());
		out.report.step_minutes = source == "losloop" ? 5 : 15;
	} else if (source == "panel") {
		out.panel = read_wide_csv(series, true);
		out.edges = DynamicGraph(out.panel.nodes(), out.panel.steps(),
		                         load_edge_list(links, out.panel.nodes(), out.panel.steps()))
		                .edges();
	} else {
		throw ConfigError("unknown ingest source '" + source + "' (expected losloop, sztaxi or panel)");
	}
	out.report.nodes = out.panel.nodes();
	out.report.steps = out.panel.steps();
	out.report.edges = out.edges.size();
	out.report.missing_rate =
	    static_cast<double>(out.panel.missing_count()) / static_cast<double>(out.panel.nodes() * out.panel.steps());
	return out;
}

void write_ingested(const std::filesystem::path& dir, const IngestedData& data) {
	std::filesystem::create_directories(dir);
	save_panel(dir / "panel.bin", data.panel);
	save_edges(dir / "edges.tsv", data.edges);
	io::write_atomic(dir / "ingest_report.json", nlohmann::json(data.report).dump(2) + "\n");
}

} // namespace radflow
