#include "radflow/io_util.hpp"

#include <fstream>
#include <sstream>

namespace radflow::io {

std::string read_file(const std::filesystem::path& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) throw DataError("cannot open " + path.string());
	std::ostringstream buf;
	buf << in.rdbuf();
	return std::move(buf).str();
}

void write_atomic(const std::filesystem::path& path, std::string_view contents) {
	if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
	std::filesystem::path tmp = path;
	tmp += ".tmp";
	{
		std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
		if (!out) throw DataError("cannot write " + tmp.string());
		out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
		if (!out) throw DataError("short write to " + tmp.string());
	}
	std::filesystem::rename(tmp, path);
}

} // namespace radflow::io
