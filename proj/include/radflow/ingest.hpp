#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radflow/graph.hpp"
#include "radflow/panel.hpp"

namespace radflow {

struct IngestReport {
	std::string source;
	std::size_t nodes = 0, steps = 0, edges = 0;
	double step_minutes = 0; // 0 when the source does not fix a step length
	double missing_rate = 0;
};

void to_json(nlohmann::json& j, const IngestReport& r);

struct IngestedData {
	SeriesPanel panel;
	std::vector<Edge> edges;
	IngestReport report;
};

// Wide CSV: one column per node, one row per step. With a header row the
// cells name the nodes. Empty, "nan" and "NA" cells are missing.
SeriesPanel read_wide_csv(const std::filesystem::path& path, bool header = true);

// Square matrix CSV without header; a nonzero off-diagonal entry (i, j) is an
// edge i -> j present for the whole range [0, steps).
std::vector<Edge> read_adjacency_csv(const std::filesystem::path& path, std::size_t nodes, std::size_t steps);

// source: "losloop" and "sztaxi" read the public speed/adjacency CSV pair;
// "panel" reads a wide CSV plus an edge list in the native text format.
IngestedData ingest(const std::string& source, const std::filesystem::path& series,
                    const std::filesystem::path& links);

// Writes panel.bin, edges.tsv and ingest_report.json into `dir`.
void write_ingested(const std::filesystem::path& dir, const IngestedData& data);

} // namespace radflow
