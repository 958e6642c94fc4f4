#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace radflow {

// All randomness flows through mt19937_64 plus the helpers below, which are
// written out explicitly so seeded streams do not depend on the standard
// library's distribution implementations.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
	return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
	return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
	const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
	std::uint64_t x = rng();
	while (x >= limit) x = rng();
	return x % n;
}

inline double standard_normal(Rng& rng) {
	double u1 = uniform01(rng);
	while (u1 <= 0.0) u1 = uniform01(rng);
	const double u2 = uniform01(rng);
	return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
	std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
	                  static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
	return Rng(seq);
}

} // namespace radflow
