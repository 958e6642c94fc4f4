#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include "radflow/errors.hpp"

namespace radflow::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <class T>
void put_raw(std::string& out, T value) {
	char buf[sizeof(T)];
	std::memcpy(buf, &value, sizeof(T));
	out.append(buf, sizeof(T));
}

inline void put_u32(std::string& out, std::uint32_t v) { put_raw(out, v); }
inline void put_u64(std::string& out, std::uint64_t v) { put_raw(out, v); }
inline void put_f32(std::string& out, float v) { put_raw(out, v); }
inline void put_f64(std::string& out, double v) { put_raw(out, v); }

// Bounds-checked cursor over a byte buffer; truncation raises FormatError.
class Reader {
public:
	Reader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

	std::string_view bytes(std::uint64_t n) {
		if (n > data_.size() - pos_) throw FormatError(source_ + ": truncated payload");
		auto out = data_.substr(pos_, n);
		pos_ += n;
		return out;
	}
	template <class T>
	T raw() {
		T v;
		std::memcpy(&v, bytes(sizeof(T)).data(), sizeof(T));
		return v;
	}
	std::uint32_t u32() { return raw<std::uint32_t>(); }
	std::uint64_t u64() { return raw<std::uint64_t>(); }
	float f32() { return raw<float>(); }
	double f64() { return raw<double>(); }
	bool at_end() const { return pos_ == data_.size(); }
	std::size_t position() const { return pos_; }

private:
	std::string_view data_;
	std::string source_;
	std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace radflow::io
