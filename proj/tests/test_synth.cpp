#include <doctest.h>

#include <filesystem>

#include "radflow/errors.hpp"
#include "radflow/synth.hpp"

using namespace radflow;

namespace {

SynthConfig small(double churn = 0.1) {
	SynthConfig c;
	c.nodes = 15;
	c.steps = 60;
	c.density = 3;
	c.churn = churn;
	c.seed = 11;
	return c;
}

} // namespace

TEST_CASE("same seed gives the same dataset") {
	const SynthData a = generate(small()), b = generate(small());
	CHECK(a.panel == b.panel);
	CHECK(a.base == b.base);
	CHECK(a.graph.edges() == b.graph.edges());
	CHECK(a.influence == b.influence);
	SynthConfig other = small();
	other.seed = 12;
	CHECK(!(generate(other).panel == a.panel));
}

TEST_CASE("single pair diffusion is closed-form") {
	SeriesPanel base(2, 5, 1);
	for (std::size_t t = 0; t < 5; ++t) {
		base.value(0, t) = static_cast<float>(10 + t);
		base.value(1, t) = static_cast<float>(100 - 3 * t);
	}
	DynamicGraph g(2, 5, {{0, 1, 1, 4}});
	const SeriesPanel out = diffuse(base, g, 0.5);
	for (std::size_t t = 0; t < 5; ++t) {
		CHECK(out.value(0, t) == base.value(0, t));
		const double want = t >= 1 && t < 4 ? base.value(1, t) + 0.5 * base.value(0, t) : base.value(1, t);
		CHECK(out.value(1, t) == doctest::Approx(want).epsilon(1e-7));
	}
	const auto m = influence_matrix(g, 0.5);
	CHECK(m[0 * 2 + 1] == doctest::Approx(0.5 * 3 / 5).epsilon(1e-12));
	CHECK(m[1 * 2 + 0] == 0);
}

TEST_CASE("diffusion averages over neighbours present at each step") {
	SeriesPanel base(3, 2, 1);
	base.value(0, 0) = 4;
	base.value(1, 0) = 8;
	base.value(2, 0) = 1;
	base.value(0, 1) = 4;
	base.value(1, 1) = 8;
	base.value(2, 1) = 1;
	DynamicGraph g(3, 2, {{0, 2, 0, 2}, {1, 2, 0, 1}});
	const SeriesPanel out = diffuse(base, g, 0.25);
	CHECK(out.value(2, 0) == doctest::Approx(1 + 0.25 * 6).epsilon(1e-7));
	CHECK(out.value(2, 1) == doctest::Approx(1 + 0.25 * 4).epsilon(1e-7));
	const auto m = influence_matrix(g, 0.25);
	CHECK(m[0 * 3 + 2] == doctest::Approx(0.25 * (0.5 + 1) / 2).epsilon(1e-12));
	CHECK(m[1 * 3 + 2] == doctest::Approx(0.25 * 0.5 / 2).epsilon(1e-12));
}

TEST_CASE("zero influence leaves the base series") {
	SynthConfig c = small();
	c.gamma = 0;
	const SynthData d = generate(c);
	CHECK(d.panel == d.base);
	for (double x : d.influence) CHECK(x == 0);
}

TEST_CASE("edge churn extremes") {
	const SynthData fixed = generate(small(0));
	CHECK(fixed.graph.edge_count() > 0);
	for (const Edge& e : fixed.graph.edges()) {
		CHECK(e.start == 0);
		CHECK(e.end == 60);
	}
	const SynthData flicker = generate(small(1));
	CHECK(flicker.graph.edge_count() > 0);
	for (const Edge& e : flicker.graph.edges()) CHECK(e.end - e.start == 1);
	for (const Edge& e : generate(small(0.3)).graph.edges()) CHECK(e.src != e.dst);
}

TEST_CASE("series are non-negative and levels stay in range") {
	const SynthData d = generate(small());
	for (float v : d.base.values()) CHECK(v >= 0);
	for (float v : d.panel.values()) CHECK(v >= 0);
	CHECK(d.panel.missing_count() == 0);
}

TEST_CASE("generated data survives the file round trip") {
	const SynthData d = generate(small(0.2));
	const auto dir = std::filesystem::temp_directory_path() / "radflow_synth_rt";
	std::filesystem::create_directories(dir);
	save_panel(dir / "panel.bin", d.panel);
	save_edges(dir / "edges.tsv", d.graph.edges());
	CHECK(load_panel(dir / "panel.bin") == d.panel);
	CHECK(load_edges(dir / "edges.tsv", 15, 60).edges() == d.graph.edges());
	std::filesystem::remove_all(dir);
}

TEST_CASE("synth config validation and json") {
	SynthConfig c = small();
	c.gamma = 1;
	CHECK_THROWS_AS(generate(c), ConfigError);
	c = small();
	c.period = 0;
	CHECK_THROWS_AS(generate(c), ConfigError);
	c = small();
	c.churn = 1.5;
	CHECK_THROWS_AS(generate(c), ConfigError);
	c = small();
	nlohmann::json j = c;
	CHECK(j.get<SynthConfig>() == c);
}
