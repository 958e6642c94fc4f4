#include <doctest.h>

#include <cmath>
#include <numeric>

#include "radflow/errors.hpp"
#include "radflow/eval.hpp"
#include "radflow/synth.hpp"

#include "oracles.hpp"

using namespace radflow;

namespace {

using testing::oracle_metrics;
using testing::oracle_ttest;
using V = std::vector<double>;

SynthData small_synth(double gamma = 0.5, std::uint64_t seed = 1) {
	SynthConfig c;
	c.nodes = 12;
	c.steps = 80;
	c.density = 3;
	c.gamma = gamma;
	c.seed = seed;
	return generate(c);
}

ModelConfig small_model(std::size_t hops, Variant variant = Variant::attention) {
	ModelConfig c;
	c.backcast = 14;
	c.horizon = 7;
	c.hidden = 8;
	c.layers = 2;
	c.heads = 2;
	c.dropout = 0;
	c.hops = hops;
	c.variant = variant;
	return c;
}

void zero_network_output(RadflowModel& model) { model.parameters().at("agg.w_a").value.fill(0); }

} // namespace

TEST_CASE("metric examples") {
	const auto perfect = compute_metrics({{1, 2, 3}}, {{1, 2, 3}});
	CHECK(perfect.smape == 0);
	CHECK(perfect.rmse == 0);
	CHECK(perfect.mae == 0);
	CHECK(smape_metric({0}, {2}) == 200);
	CHECK(rmse_metric({0}, {2}) == 2);
	CHECK(mae_metric({0}, {2}) == 2);
	CHECK(smape_term(0, 0) == 0);
	CHECK_THROWS_AS(compute_metrics({}, {}), DataError);
	CHECK_THROWS_AS(compute_metrics({{1}}, {{1, 2}}), ShapeError);
	CHECK_THROWS_AS(compute_metrics({{1}}, {{1}, {2}}), ShapeError);
	MetricOptions nz;
	nz.nonzero_only = true;
	CHECK_THROWS_AS(compute_metrics({{1}}, {{0}}, nz), DataError);
}

TEST_CASE("metrics match the formula oracle") {
	Rng rng(21);
	for (int trial = 0; trial < 10000; ++trial) {
		const std::size_t nodes = 1 + uniform_index(rng, 3), F = 1 + uniform_index(rng, 4);
		std::vector<V> preds(nodes, V(F)), truths(nodes, V(F));
		V all_p, all_v;
		for (std::size_t n = 0; n < nodes; ++n) {
			for (std::size_t k = 0; k < F; ++k) {
				const double r = uniform01(rng);
				truths[n][k] = r < 0.2 ? 0.0 : uniform(rng, 0, 100);
				preds[n][k] = r > 0.9 ? 0.0 : uniform(rng, -20, 100);
				all_p.push_back(preds[n][k]);
				all_v.push_back(truths[n][k]);
			}
		}
		const auto got = compute_metrics(preds, truths);
		const auto want = oracle_metrics(all_p, all_v);
		CHECK(std::abs(got.smape - want.smape) < 1e-12);
		CHECK(std::abs(got.rmse - want.rmse) < 1e-12);
		CHECK(std::abs(got.mae - want.mae) < 1e-12);
		CHECK(got.smape >= 0);
		CHECK(got.smape <= 200);
		// equal-length nodes: per-node values average to the overall value
		CHECK(std::accumulate(got.node_smape.begin(), got.node_smape.end(), 0.0) / static_cast<double>(nodes) ==
		      doctest::Approx(got.smape).epsilon(1e-12));
		CHECK(std::accumulate(got.node_mae.begin(), got.node_mae.end(), 0.0) / static_cast<double>(nodes) ==
		      doctest::Approx(got.mae).epsilon(1e-12));
	}
}

TEST_CASE("non-zero-only metrics drop zero-truth steps") {
	MetricOptions nz;
	nz.nonzero_only = true;
	const auto r = compute_metrics({{5, 10, 3}}, {{0, 10, 6}}, nz);
	CHECK(r.terms == 2);
	CHECK(r.smape == doctest::Approx((0 + 100.0 * 3 / 4.5) / 2).epsilon(1e-12));
	CHECK(r.mae == doctest::Approx(1.5).epsilon(1e-12));
	CHECK(compute_metrics({{5, 10, 3}}, {{0, 10, 6}}).terms == 3);
}

TEST_CASE("copy baselines") {
	SeriesPanel weekly(2, 40, 1);
	for (std::size_t t = 0; t < 40; ++t) {
		weekly.value(0, t) = static_cast<float>(10 + (t % 7) * 3);
		weekly.value(1, t) = 42;
	}
	Dataset data(weekly, DynamicGraph(2, 40, {}));
	const V truth0(data.filled.values().begin() + 30, data.filled.values().begin() + 40);
	CHECK(smape_metric(baseline_copy_week(data, 0, 30, 10), truth0) == 0);
	CHECK(baseline_copy_step(data, 0, 30, 3) == V(3, data.filled.value(0, 29)));
	CHECK(baseline_copy_week(data, 1, 30, 10) == baseline_copy_step(data, 1, 30, 10));
	CHECK_THROWS_AS(baseline_copy_step(data, 0, 0, 3), DataError);
	CHECK_THROWS_AS(baseline_copy_week(data, 0, 6, 3), DataError);
	CHECK_THROWS_AS(baseline_copy_week(data, 0, 35, 10), DataError);
}

TEST_CASE("ARNet closed forms") {
	Arnet net(2, 7, {{0, 1, 0, 10}});
	const V lags{1, 2, 3, 4, 5, 6, 7};
	net.beta(0) = 0;
	for (std::size_t k = 0; k < 7; ++k) net.alpha(1, k) = static_cast<Real>(0.1 * static_cast<double>(k + 1));
	double ar = 0;
	for (std::size_t k = 0; k < 7; ++k) ar += 0.1 * static_cast<double>(k + 1) * lags[k];
	CHECK(net.predict_step(1, lags, {123}) == doctest::Approx(ar).epsilon(1e-12));

	for (std::size_t k = 0; k < 7; ++k) net.alpha(1, k) = 0;
	net.beta(0) = 1;
	CHECK(net.predict_step(1, lags, {123}) == 123);

	net.beta(0) = 0;
	const double w[7] = {0.4, 0.2, 0.1, 0.1, 0.1, 0.05, 0.05};
	for (std::size_t k = 0; k < 7; ++k) net.alpha(1, k) = static_cast<Real>(w[k]);
	CHECK(net.predict_step(1, V(7, 9.5), {3}) == doctest::Approx(9.5).epsilon(1e-12));
	CHECK_THROWS_AS(net.predict_step(1, V(6, 1), {3}), ShapeError);
	CHECK_THROWS_AS(net.predict_step(0, lags, {3}), ShapeError);
}

TEST_CASE("ARNet static collapse, errors and fitting") {
	DynamicGraph g(3, 10, {{0, 1, 0, 6}, {2, 1, 0, 3}, {1, 0, 0, 10}});
	auto edges = collapse_to_static(g, 0, 10, 0.5);
	REQUIRE(edges.size() == 2);
	CHECK(edges[0].src == 1);
	CHECK(edges[0].dst == 0);
	CHECK(edges[1].src == 0);
	CHECK(edges[1].dst == 1);

	// node 1 copies node 0, which follows a noisy AR process
	const std::size_t T = 200;
	SeriesPanel panel(2, T, 1);
	Rng rng(4);
	double x = 0;
	for (std::size_t t = 0; t < T; ++t) {
		x = 0.5 * x + standard_normal(rng);
		panel.value(0, t) = static_cast<float>(50 + 10 * x);
		panel.value(1, t) = panel.value(0, t);
	}
	Dataset data(panel, DynamicGraph(2, T, {{0, 1, 0, T}}));
	ArnetConfig cfg;
	cfg.train_end = 180;
	cfg.optim.steps_per_epoch = 1500;
	const Arnet fitted = arnet_fit(data, cfg);
	REQUIRE(fitted.edges().size() == 1);
	const Arnet persistence(2, 7, fitted.edges());
	const V truth(data.filled.values().begin() + T + 180, data.filled.values().begin() + 2 * T);
	const double before = smape_metric(persistence.predict(data, 1, 180, 20), truth);
	const double after = smape_metric(fitted.predict(data, 1, 180, 20), truth);
	MESSAGE("persistence " << before << " fitted " << after);
	CHECK(after < 0.5 * before);
	CHECK(persistence.predict(data, 0, 180, 3) == V(3, data.filled.value(0, 179)));

	ArnetConfig short_cfg;
	short_cfg.train_end = 5;
	CHECK_THROWS_AS(arnet_fit(data, short_cfg), DataError);
	CHECK_THROWS_AS(fitted.predict(data, 1, 5, 3), DataError);
	Dataset wide(SeriesPanel(2, 20, 2), DynamicGraph(2, 20, {}));
	CHECK_THROWS_AS(persistence.predict(wide, 0, 10, 3), ConfigError);
}

TEST_CASE("evaluate: without network inputs the setting and edges do not matter") {
	const SynthData s = small_synth();
	Dataset data(s.panel, s.graph);
	RadflowModel model(small_model(0), 3);
	EvalOptions eo;
	eo.horizon_start = 60;
	const auto imp = evaluate(model, data, eo);
	eo.setting = Setting::forecast;
	const auto fc = evaluate(model, data, eo);
	REQUIRE(imp.bundles.size() == 12);
	for (std::size_t i = 0; i < imp.bundles.size(); ++i) CHECK(imp.bundles[i].pred == fc.bundles[i].pred);
	CHECK(imp.report.smape == fc.report.smape);

	Dataset no_edges(s.panel, DynamicGraph(12, 80, {}));
	CHECK(evaluate(model, no_edges, eo).report.smape == imp.report.smape);
}

TEST_CASE("evaluate: zero network output equals the network-free model") {
	const SynthData s = small_synth();
	Dataset data(s.panel, s.graph);
	for (Variant v : {Variant::attention, Variant::graphsage, Variant::meanpool}) {
		RadflowModel model(small_model(1, v), 8);
		zero_network_output(model);
		EvalOptions eo;
		eo.horizon_start = 70;
		const auto with = evaluate(model, data, eo);
		const auto without = evaluate(without_network(model), data, eo);
		for (std::size_t i = 0; i < with.bundles.size(); ++i) CHECK(with.bundles[i].pred == without.bundles[i].pred);
		CHECK(with.report.smape == without.report.smape);
	}
}

TEST_CASE("evaluate: bundles, layers and attention traces") {
	const SynthData s = small_synth();
	Dataset data(s.panel, s.graph);
	RadflowModel model(small_model(1), 2);
	EvalOptions eo;
	eo.horizon_start = 50;
	eo.keep_layers = true;
	eo.keep_attention = true;
	eo.batch_size = 5;
	const auto r = evaluate(model, data, eo);
	REQUIRE(r.bundles.size() == 12);
	std::size_t with_neighbors = 0;
	for (const auto& b : r.bundles) {
		CHECK(b.pred.size() == 7);
		REQUIRE(b.layers.size() == 2);
		for (std::size_t k = 0; k < 7; ++k) {
			CHECK(b.layers[0][k] + b.layers[1][k] == doctest::Approx(b.recurrent[k]).epsilon(1e-9));
			CHECK(b.pred[k] == doctest::Approx(std::max(0.0, std::expm1(b.recurrent[k] + b.network[k]))).epsilon(1e-9));
			CHECK(b.truth[k] == data.filled.value(b.node, 50 + k));
		}
		REQUIRE(b.attention.size() == 7);
		for (std::size_t k = 0; k < 7; ++k) {
			const AttentionStep& a = b.attention[k];
			const std::size_t slots = a.neighbors.size();
			bool any = false;
			for (std::size_t i = 0; i < slots; ++i) {
				if (a.neighbors[i] >= 0) CHECK(a.present[i] == data.graph.has_edge(a.neighbors[i], b.node, 50 + k));
				else CHECK(a.present[i] == 0);
				any = any || a.present[i];
			}
			if (!any) {
				for (double x : b.network) (void)x;
				CHECK(b.network[k] == 0);
				continue;
			}
			++with_neighbors;
			REQUIRE(a.weights.size() == 2 * (slots + 1));
			for (std::size_t h = 0; h < 2; ++h) {
				double sum = 0;
				for (std::size_t i = 0; i <= slots; ++i) {
					const double w = a.weights[h * (slots + 1) + i];
					CHECK(w >= 0);
					if (i < slots && !a.present[i]) CHECK(w == 0);
					sum += w;
				}
				CHECK(sum == doctest::Approx(1).epsilon(1e-12));
			}
		}
	}
	CHECK(with_neighbors > 0);
	V mean_smape;
	for (const auto& b : r.bundles) mean_smape.push_back(smape_metric(b.pred, b.truth));
	CHECK(std::accumulate(mean_smape.begin(), mean_smape.end(), 0.0) / 12 == doctest::Approx(r.report.smape).epsilon(1e-12));
}

TEST_CASE("evaluate errors") {
	const SynthData s = small_synth();
	Dataset data(s.panel, s.graph);
	RadflowModel model(small_model(1), 2);
	EvalOptions eo;
	eo.horizon_start = 10;
	CHECK_THROWS_AS(evaluate(model, data, eo), DataError);
	eo.horizon_start = 75;
	CHECK_THROWS_AS(evaluate(model, data, eo), DataError);
	eo.horizon_start = 60;
	eo.setting = Setting::forecast;
	CHECK_THROWS_AS(evaluate(model, data, eo), ConfigError);
	RadflowModel base(small_model(0), 2);
	eo.forecast_model = &base;
	CHECK_NOTHROW(evaluate(model, data, eo));
	eo.forecast_model = &model;
	CHECK_THROWS_AS(evaluate(model, data, eo), ConfigError);
}

TEST_CASE("forecast setting feeds neighbour forecasts instead of truth") {
	const SynthData s = small_synth();
	Dataset data(s.panel, s.graph);
	RadflowModel model(small_model(1), 6);
	RadflowModel base(small_model(0), 6);
	EvalOptions eo;
	eo.horizon_start = 60;
	const auto imp = evaluate(model, data, eo);
	eo.setting = Setting::forecast;
	eo.forecast_model = &base;
	const auto fc = evaluate(model, data, eo);
	// only the neighbours' horizon inputs change; an untrained model clamps
	// most raw forecasts to 0, so compare the network terms
	bool differs = false;
	for (std::size_t i = 0; i < imp.bundles.size(); ++i)
		differs = differs || imp.bundles[i].network != fc.bundles[i].network;
	CHECK(differs);
	for (std::size_t i = 0; i < imp.bundles.size(); ++i) CHECK(imp.bundles[i].truth == fc.bundles[i].truth);
}

TEST_CASE("paired t-test") {
	const auto same = paired_ttest({1, 2, 3}, {1, 2, 3});
	CHECK(same.p == 1.0);
	CHECK(same.t == 0);
	const auto shift = paired_ttest({2, 3, 4, 5}, {1, 2, 3, 4});
	CHECK(shift.p == 0.0);
	CHECK(std::isinf(shift.t));
	CHECK(shift.t > 0);
	CHECK_THROWS_AS(paired_ttest({1}, {2}), ConfigError);
	CHECK_THROWS_AS(paired_ttest({1, 2}, {2}), ConfigError);

	Rng rng(17);
	for (int trial = 0; trial < 100; ++trial) {
		const std::size_t n = 2 + uniform_index(rng, 30);
		V a(n), b(n);
		const double shift_by = uniform(rng, -1, 1);
		for (std::size_t i = 0; i < n; ++i) {
			a[i] = uniform(rng, 0, 10);
			b[i] = a[i] + shift_by + standard_normal(rng);
		}
		const auto got = paired_ttest(a, b);
		const auto [t, p] = oracle_ttest(a, b);
		CHECK(got.n == n);
		CHECK(std::abs(got.t - t) < 1e-9 * std::max(1.0, std::abs(t)));
		CHECK(std::abs(got.p - p) < 1e-9);
	}
}

TEST_CASE("value and edge deletion") {
	const SynthData s = small_synth();
	const SeriesPanel d0 = drop_values(s.panel, 0, 4);
	CHECK(d0 == s.panel);
	const SeriesPanel d3 = drop_values(s.panel, 0.3, 4), d6 = drop_values(s.panel, 0.6, 4);
	CHECK(d3.missing_count() == 288);
	CHECK(d6.missing_count() == 576);
	for (std::size_t n = 0; n < 12; ++n)
		for (std::size_t t = 0; t < 80; ++t)
			if (d3.missing(n, t)) CHECK(d6.missing(n, t));
	CHECK(drop_values(s.panel, 0.3, 4) == d3);
	CHECK(drop_values(s.panel, 1, 4).missing_count() == 960);
	CHECK_THROWS_AS(drop_values(s.panel, 1.5, 4), ConfigError);
	CHECK_THROWS_AS(drop_values(s.panel, -0.1, 4), ConfigError);

	CHECK(drop_edges(s.graph, 0, 4) == s.graph.edges());
	CHECK(drop_edges(s.graph, 1, 4).empty());
	const auto half = drop_edges(s.graph, 0.5, 4);
	DynamicGraph g(12, 80, half);
	std::size_t pairs = 0;
	for (NodeId j = 0; j < 12; ++j) pairs += s.graph.in_neighbors_ever(j).size();
	std::size_t kept = 0;
	for (NodeId j = 0; j < 12; ++j) kept += g.in_neighbors_ever(j).size();
	CHECK(kept == pairs - static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(pairs))));
}

TEST_CASE("robustness sweep") {
	const SynthData s = small_synth();
	Dataset data(s.panel, s.graph);
	RadflowModel model(small_model(1), 12);
	EvalOptions eo;
	eo.horizon_start = 60;
	const double baseline = evaluate(model, data, eo).report.smape;
	const double no_network = evaluate(without_network(model), data, eo).report.smape;
	const auto curve = robustness_sweep(model, data, eo, {0, 0.5}, {0, 0.4, 1.0}, 9);
	REQUIRE(curve.size() == 5);
	CHECK(curve[0].kind == "values");
	CHECK(curve[0].smape == baseline);
	CHECK(curve[2].kind == "edges");
	CHECK(curve[2].smape == baseline);
	CHECK(std::abs(curve[4].smape - no_network) < 1e-9);
	const auto again = robustness_sweep(model, data, eo, {0, 0.5}, {0, 0.4, 1.0}, 9);
	for (std::size_t i = 0; i < curve.size(); ++i) CHECK(again[i].smape == curve[i].smape);
	CHECK(robustness_sweep(model, data, eo, {}, {}, 9).empty());
	CHECK_THROWS_AS(robustness_sweep(model, data, eo, {2}, {}, 9), ConfigError);
	eo.setting = Setting::forecast;
	CHECK_THROWS_AS(robustness_sweep(model, data, eo, {0}, {}, 9), ConfigError);
}

TEST_CASE("counterfactual doubling") {
	const SynthData s = small_synth();
	Dataset data(s.panel, s.graph);
	RadflowModel model(small_model(1), 5);
	// first ego with a selected neighbour present on the first horizon day
	EvalOptions eo;
	eo.horizon_start = 60;
	eo.keep_attention = true;
	const auto r = evaluate(model, data, eo);
	NodeId ego = 0;
	std::int64_t nb = -1;
	for (const auto& b : r.bundles) {
		for (std::size_t i = 0; i < b.attention[0].neighbors.size() && nb < 0; ++i)
			if (b.attention[0].present[i]) {
				ego = b.node;
				nb = b.attention[0].neighbors[i];
			}
		if (nb >= 0) break;
	}
	REQUIRE(nb >= 0);
	const auto rec = counterfactual_double(model, data, ego, static_cast<NodeId>(nb), 60, 60);
	CHECK(rec.ego == ego);
	CHECK(rec.day == 60);
	CHECK(rec.attention_before >= 0);
	CHECK(rec.attention_before <= 1);
	CHECK(rec.forecast_before == doctest::Approx(r.bundles[ego].pred[0]).epsilon(1e-12));

	RadflowModel silent = model;
	zero_network_output(silent);
	const auto flat = counterfactual_double(silent, data, ego, static_cast<NodeId>(nb), 60, 60);
	CHECK(flat.forecast_after == flat.forecast_before);
	CHECK(flat.relative_change == 0);

	NodeId stranger = 0;
	while (stranger == ego || data.graph.has_edge(stranger, ego, 61)) ++stranger;
	CHECK_THROWS_AS(counterfactual_double(model, data, ego, stranger, 61, 60), DataError);
	CHECK_THROWS_AS(counterfactual_double(model, data, ego, static_cast<NodeId>(nb), 59, 60), DataError);
	CHECK_THROWS_AS(counterfactual_double(RadflowModel(small_model(0), 1), data, ego, static_cast<NodeId>(nb), 60, 60),
	                ConfigError);
}

TEST_CASE("network contribution") {
	ForecastBundle b;
	b.recurrent = {1, -2, 3};
	b.network = {0, 0, 0};
	CHECK(network_contribution(b) == 0);
	b.network = {-1, 2, 3};
	CHECK(network_contribution(b) == doctest::Approx(0.5).epsilon(1e-6));
	double prev = -1;
	for (double a = 0; a < 10; a += 0.5) {
		b.network = {a, a, a};
		const double c = network_contribution(b);
		CHECK(c > prev);
		CHECK(c >= 0);
		CHECK(c <= 1);
		prev = c;
	}
}

TEST_CASE("pearson correlation") {
	V x, y, anti;
	for (int t = 0; t < 28; ++t) {
		x.push_back(std::sin(2 * std::numbers::pi * t / 7));
		anti.push_back(-std::sin(2 * std::numbers::pi * t / 7));
	}
	CHECK(pearson(x, x) == doctest::Approx(1).epsilon(1e-12));
	CHECK(pearson(x, anti) == doctest::Approx(-1).epsilon(1e-12));
	CHECK(std::isnan(pearson(x, V(28, 3.0))));
	// cov / (sd sd) by hand: x = 1..4, y = 2, 1, 4, 3
	const V a{1, 2, 3, 4}, b{2, 1, 4, 3};
	const double cov = ((-1.5) * (-0.5) + (-0.5) * (-1.5) + 0.5 * 1.5 + 1.5 * 0.5) / 3;
	const double sd = std::sqrt(5.0 / 3);
	CHECK(pearson(a, b) == doctest::Approx(cov / (sd * sd)).epsilon(1e-12));
	CHECK_THROWS_AS(pearson({1}, {1}), ShapeError);
}

TEST_CASE("attention correlation records") {
	const SynthData s = small_synth();
	Dataset data(s.panel, s.graph);
	RadflowModel model(small_model(1), 5);
	EvalOptions eo;
	eo.horizon_start = 60;
	const auto records = attention_correlation(model, data, eo);
	REQUIRE(!records.empty());
	for (const auto& r : records) {
		CHECK(r.mean_attention >= 0);
		CHECK(r.mean_attention <= 1);
		V x, y;
		for (std::size_t k = 0; k < 7; ++k) {
			x.push_back(data.filled.value(r.ego, 60 + k));
			y.push_back(data.filled.value(r.neighbor, 60 + k));
		}
		const double want = pearson(x, y);
		if (std::isnan(want)) CHECK(!r.defined);
		else CHECK(r.correlation == doctest::Approx(want).epsilon(1e-12));
	}
	CHECK_THROWS_AS(attention_correlation(RadflowModel(small_model(1, Variant::graphsage), 1), data, eo), ConfigError);
}
