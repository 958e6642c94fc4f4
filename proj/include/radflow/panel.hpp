#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace radflow {

struct NodeMeta {
	std::string name;
	std::string category; // may be empty
	bool operator==(const NodeMeta&) const = default;
};

// N series of T steps with D values each, on the raw scale. `missing` marks
// observations whose value must not be read.
class SeriesPanel {
public:
	SeriesPanel() = default;
	SeriesPanel(std::size_t nodes, std::size_t steps, std::size_t dim);

	std::size_t nodes() const { return nodes_; }
	std::size_t steps() const { return steps_; }
	std::size_t dim() const { return dim_; }

	float value(std::size_t node, std::size_t t, std::size_t d = 0) const { return values_[index(node, t, d)]; }
	float& value(std::size_t node, std::size_t t, std::size_t d = 0) { return values_[index(node, t, d)]; }
	bool missing(std::size_t node, std::size_t t) const { return missing_[node * steps_ + t] != 0; }
	void set_missing(std::size_t node, std::size_t t, bool m) { missing_[node * steps_ + t] = m; }
	// Sum over the D values, the quantity neighbour scores are built from.
	double total(std::size_t node, std::size_t t) const;

	std::vector<float>& values() { return values_; }
	const std::vector<float>& values() const { return values_; }
	const std::vector<std::uint8_t>& missing_flags() const { return missing_; }
	std::vector<NodeMeta>& meta() { return meta_; }
	const std::vector<NodeMeta>& meta() const { return meta_; }

	std::size_t missing_count() const;
	bool operator==(const SeriesPanel&) const = default;

private:
	std::size_t index(std::size_t node, std::size_t t, std::size_t d) const { return (node * steps_ + t) * dim_ + d; }

	std::size_t nodes_ = 0, steps_ = 0, dim_ = 0;
	std::vector<float> values_;
	std::vector<std::uint8_t> missing_;
	std::vector<NodeMeta> meta_;
};

// Replaces every missing value with the last valid one before it; leading
// gaps become 0. Returns a panel with no missing flags.
SeriesPanel forward_fill(const SeriesPanel& panel);
// Same rule on one series; `missing` may be shorter than `values` only if empty.
std::vector<double> forward_fill(const std::vector<double>& values, const std::vector<std::uint8_t>& missing);

void save_panel(const std::filesystem::path& path, const SeriesPanel& panel);
SeriesPanel load_panel(const std::filesystem::path& path);

// One node over [start, start + length), read without loading the rest.
struct PanelWindow {
	std::size_t node = 0, start = 0, length = 0, dim = 0;
	std::vector<float> values; // length * dim
	std::vector<std::uint8_t> missing;
};

// Random-access reader over a panel file.
class PanelFile {
public:
	explicit PanelFile(const std::filesystem::path& path);

	std::size_t nodes() const { return nodes_; }
	std::size_t steps() const { return steps_; }
	std::size_t dim() const { return dim_; }

	PanelWindow read_window(std::size_t node, std::size_t start, std::size_t length);

private:
	std::filesystem::path path_;
	std::ifstream in_;
	std::size_t nodes_ = 0, steps_ = 0, dim_ = 0;
	std::uint64_t values_offset_ = 0, mask_offset_ = 0;
};

} // namespace radflow
