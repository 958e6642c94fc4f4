#include "radflow/panel.hpp"

#include <sstream>

#include "radflow/errors.hpp"
#include "radflow/io_util.hpp"

namespace radflow {

namespace {

constexpr char kPanelMagic[12] = {'R', 'A', 'D', 'F', 'L', 'O', 'W', 'P', 'A', 'N', 'E', 'L'};
constexpr std::uint32_t kPanelVersion = 1;
constexpr std::uint64_t kHeaderBytes = 16 + 3 * 8;

struct Header {
	std::uint64_t nodes, steps, dim;
};

Header read_header(io::Reader& in, const std::string& source) {
	if (in.bytes(sizeof(kPanelMagic)) != std::string_view(kPanelMagic, sizeof(kPanelMagic))) {
		throw FormatError(source + ": not a panel file (bad magic)");
	}
	if (const auto v = in.u32(); v != kPanelVersion) {
		throw FormatError(source + ": unsupported panel version " + std::to_string(v));
	}
	Header h{in.u64(), in.u64(), in.u64()};
	if (h.dim == 0 && h.nodes * h.steps != 0) throw FormatError(source + ": zero dimension");
	return h;
}

std::uint64_t mask_bytes(std::uint64_t bits) { return (bits + 7) / 8; }

// Rejects headers whose payload could not fit in `budget` bytes, before any
// multiplication can overflow.
void check_sizes(const Header& h, std::uint64_t budget, const std::string& source) {
	if ((h.nodes && h.steps > budget / h.nodes) || (h.nodes * h.steps != 0 && h.dim > budget / (h.nodes * h.steps)) ||
	    h.nodes * h.steps * h.dim * 4 > budget) {
		throw FormatError(source + ": truncated payload");
	}
}

} // namespace

SeriesPanel::SeriesPanel(std::size_t nodes, std::size_t steps, std::size_t dim)
    : nodes_(nodes), steps_(steps), dim_(dim), values_(nodes * steps * dim, 0.0f), missing_(nodes * steps, 0),
      meta_(nodes) {
	for (std::size_t i = 0; i < nodes; ++i) meta_[i].name = std::to_string(i);
}

double SeriesPanel::total(std::size_t node, std::size_t t) const {
	double s = 0;
	for (std::size_t d = 0; d < dim_; ++d) s += value(node, t, d);
	return s;
}

std::size_t SeriesPanel::missing_count() const {
	std::size_t c = 0;
	for (auto m : missing_) c += m != 0;
	return c;
}

SeriesPanel forward_fill(const SeriesPanel& panel) {
	SeriesPanel out = panel;
	for (std::size_t n = 0; n < panel.nodes(); ++n) {
		for (std::size_t t = 0; t < panel.steps(); ++t) {
			if (!panel.missing(n, t)) continue;
			for (std::size_t d = 0; d < panel.dim(); ++d) out.value(n, t, d) = t == 0 ? 0.0f : out.value(n, t - 1, d);
			out.set_missing(n, t, false);
		}
	}
	return out;
}

std::vector<double> forward_fill(const std::vector<double>& values, const std::vector<std::uint8_t>& missing) {
	if (!missing.empty() && missing.size() != values.size()) throw ShapeError("mask and series lengths differ");
	std::vector<double> out = values;
	double last = 0;
	for (std::size_t i = 0; i < out.size(); ++i) {
		if (!missing.empty() && missing[i]) out[i] = last;
		else last = out[i];
	}
	return out;
}

void save_panel(const std::filesystem::path& path, const SeriesPanel& panel) {
	std::string blob;
	blob.append(kPanelMagic, sizeof(kPanelMagic));
	io::put_u32(blob, kPanelVersion);
	io::put_u64(blob, panel.nodes());
	io::put_u64(blob, panel.steps());
	io::put_u64(blob, panel.dim());
	blob.reserve(blob.size() + panel.values().size() * 4 + panel.missing_flags().size() / 8 + 64);
	for (float v : panel.values()) io::put_f32(blob, v);
	const auto& flags = panel.missing_flags();
	std::string bits(mask_bytes(flags.size()), '\0');
	for (std::size_t i = 0; i < flags.size(); ++i)
		if (flags[i]) bits[i / 8] = static_cast<char>(bits[i / 8] | (1 << (i % 8)));
	blob += bits;
	std::string meta;
	for (const auto& m : panel.meta()) {
		if (m.name.find_first_of("\t\n") != std::string::npos || m.category.find_first_of("\t\n") != std::string::npos) {
			throw DataError("node metadata may not contain tabs or newlines: " + m.name);
		}
		meta += m.name + '\t' + m.category + '\n';
	}
	io::put_u64(blob, meta.size());
	blob += meta;
	io::write_atomic(path, blob);
}

SeriesPanel load_panel(const std::filesystem::path& path) {
	const std::string blob = io::read_file(path);
	const std::string source = path.string();
	io::Reader in(blob, source);
	const Header h = read_header(in, source);
	check_sizes(h, blob.size(), source);
	const std::uint64_t cells = h.nodes * h.steps;
	SeriesPanel panel(h.nodes, h.steps, h.dim);
	for (float& v : panel.values()) v = in.f32();
	const std::string_view bits = in.bytes(mask_bytes(cells));
	for (std::size_t i = 0; i < cells; ++i)
		panel.set_missing(i / h.steps, i % h.steps, (static_cast<unsigned char>(bits[i / 8]) >> (i % 8)) & 1);
	std::istringstream meta{std::string(in.bytes(in.u64()))};
	std::string line;
	std::size_t node = 0;
	while (std::getline(meta, line)) {
		if (node >= h.nodes) throw FormatError(source + ": more metadata lines than nodes");
		const auto tab = line.find('\t');
		if (tab == std::string::npos) throw FormatError(source + ": malformed metadata line");
		panel.meta()[node] = {line.substr(0, tab), line.substr(tab + 1)};
		++node;
	}
	if (node != h.nodes) throw FormatError(source + ": metadata covers " + std::to_string(node) + " of " +
	                                       std::to_string(h.nodes) + " nodes");
	if (!in.at_end()) throw FormatError(source + ": trailing bytes after panel payload");
	return panel;
}

PanelFile::PanelFile(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
	if (!in_) throw DataError("cannot open " + path.string());
	std::string head(kHeaderBytes, '\0');
	in_.read(head.data(), static_cast<std::streamsize>(head.size()));
	if (in_.gcount() != static_cast<std::streamsize>(head.size())) throw FormatError(path.string() + ": truncated header");
	io::Reader r(head, path.string());
	const Header h = read_header(r, path.string());
	const auto size = std::filesystem::file_size(path);
	check_sizes(h, size, path.string());
	nodes_ = h.nodes;
	steps_ = h.steps;
	dim_ = h.dim;
	values_offset_ = kHeaderBytes;
	mask_offset_ = values_offset_ + nodes_ * steps_ * dim_ * 4;
	if (size < mask_offset_ + mask_bytes(nodes_ * steps_)) throw FormatError(path.string() + ": truncated payload");
}

PanelWindow PanelFile::read_window(std::size_t node, std::size_t start, std::size_t length) {
	if (node >= nodes_ || start > steps_ || length > steps_ - start) {
		throw DataError("window [" + std::to_string(start) + ", " + std::to_string(start + length) + ") of node " +
		                std::to_string(node) + " is outside the panel");
	}
	PanelWindow w{node, start, length, dim_, std::vector<float>(length * dim_), std::vector<std::uint8_t>(length)};
	const std::uint64_t first = node * steps_ + start;
	in_.seekg(static_cast<std::streamoff>(values_offset_ + first * dim_ * 4));
	in_.read(reinterpret_cast<char*>(w.values.data()), static_cast<std::streamsize>(w.values.size() * 4));
	if (!in_) throw FormatError(path_.string() + ": short read");
	if (length > 0) {
		const std::uint64_t lo = first / 8, hi = (first + length - 1) / 8;
		std::string bits(hi - lo + 1, '\0');
		in_.seekg(static_cast<std::streamoff>(mask_offset_ + lo));
		in_.read(bits.data(), static_cast<std::streamsize>(bits.size()));
		if (!in_) throw FormatError(path_.string() + ": short read");
		for (std::size_t i = 0; i < length; ++i) {
			const std::uint64_t bit = first + i;
			w.missing[i] = (static_cast<unsigned char>(bits[bit / 8 - lo]) >> (bit % 8)) & 1;
		}
	}
	return w;
}

} // namespace radflow
