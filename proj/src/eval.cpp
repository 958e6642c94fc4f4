#include "radflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "radflow/errors.hpp"

namespace radflow {

// ---- metrics ------------------------------------------------------------

double smape_term(double truth, double pred) {
	const double denom = std::abs(truth) + std::abs(pred);
	if (denom == 0) return 0.0;
	return 200.0 * (std::abs(truth - pred) / denom);
}

MetricReport compute_metrics(const std::vector<std::vector<double>>& preds,
                             const std::vector<std::vector<double>>& truths, const MetricOptions& options) {
	if (preds.size() != truths.size()) throw ShapeError("metrics: prediction and truth sample counts differ");
	if (preds.empty()) throw DataError("metrics: no samples");
	MetricReport r;
	r.samples = preds.size();
	double smape = 0, sq = 0, ab = 0;
	for (std::size_t j = 0; j < preds.size(); ++j) {
		if (preds[j].size() != truths[j].size()) throw ShapeError("metrics: sample lengths differ");
		double ns = 0, nsq = 0, nab = 0;
		std::size_t count = 0;
		for (std::size_t i = 0; i < preds[j].size(); ++i) {
			const double v = truths[j][i], p = preds[j][i];
			if (options.nonzero_only && v == 0) continue;
			ns += smape_term(v, p);
			nsq += (v - p) * (v - p);
			nab += std::abs(v - p);
			++count;
		}
		smape += ns;
		sq += nsq;
		ab += nab;
		r.terms += count;
		const double c = count ? static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
		r.node_smape.push_back(ns / c);
		r.node_rmse.push_back(std::sqrt(nsq / c));
		r.node_mae.push_back(nab / c);
	}
	if (r.terms == 0) throw DataError("metrics: every term was excluded");
	const double n = static_cast<double>(r.terms);
	r.smape = smape / n;
	r.rmse = std::sqrt(sq / n);
	r.mae = ab / n;
	return r;
}

double smape_metric(const std::vector<double>& pred, const std::vector<double>& truth, const MetricOptions& options) {
	return compute_metrics({pred}, {truth}, options).smape;
}

double rmse_metric(const std::vector<double>& pred, const std::vector<double>& truth, const MetricOptions& options) {
	return compute_metrics({pred}, {truth}, options).rmse;
}

double mae_metric(const std::vector<double>& pred, const std::vector<double>& truth, const MetricOptions& options) {
	return compute_metrics({pred}, {truth}, options).mae;
}

// ---- baselines ------------------------------------------------------------

namespace {

void check_horizon(const Dataset& data, NodeId node, std::size_t horizon_start, std::size_t horizon,
                   std::size_t history) {
	if (node >= data.nodes()) throw DataError("node " + std::to_string(node) + " outside the panel");
	if (horizon_start < history) {
		throw DataError("need " + std::to_string(history) + " steps of history before step " +
		                std::to_string(horizon_start));
	}
	if (horizon_start + horizon > data.steps()) throw DataError("horizon runs past the end of the data");
}

} // namespace

std::vector<double> baseline_copy_step(const Dataset& data, NodeId node, std::size_t horizon_start,
                                       std::size_t horizon) {
	check_horizon(data, node, horizon_start, horizon, 1);
	const std::size_t D = data.dim();
	std::vector<double> out(horizon * D);
	for (std::size_t k = 0; k < horizon; ++k)
		for (std::size_t d = 0; d < D; ++d) out[k * D + d] = data.filled.value(node, horizon_start - 1, d);
	return out;
}

std::vector<double> baseline_copy_week(const Dataset& data, NodeId node, std::size_t horizon_start,
                                       std::size_t horizon, std::size_t period) {
	if (period < 1) throw ConfigError("period must be >= 1");
	check_horizon(data, node, horizon_start, horizon, period);
	const std::size_t D = data.dim();
	std::vector<double> out(horizon * D);
	for (std::size_t k = 0; k < horizon; ++k)
		for (std::size_t d = 0; d < D; ++d)
			out[k * D + d] = data.filled.value(node, horizon_start - period + k % period, d);
	return out;
}

// ---- ARNet --------------------------------------------------------------

OptimConfig ArnetConfig::default_optim() {
	OptimConfig c;
	c.peak_lr = 1e-2;
	c.warmup_steps = 100;
	c.epochs = 1;
	c.steps_per_epoch = 2000;
	c.weight_decay = 0;
	c.batch_size = 64;
	return c;
}

Arnet::Arnet(std::size_t nodes, std::size_t lags, std::vector<Edge> static_edges)
    : lags_(lags), edges_(std::move(static_edges)), in_edges_(nodes) {
	if (lags < 1) throw ConfigError("ARNet needs at least one lag");
	for (std::size_t e = 0; e < edges_.size(); ++e) {
		if (edges_[e].dst >= nodes || edges_[e].src >= nodes) throw DataError("ARNet edge outside the node range");
		in_edges_[edges_[e].dst].push_back(e);
	}
	// start from persistence: alpha_1 = 1
	Tensor alpha(Shape{nodes, lags}, Real{0});
	for (std::size_t n = 0; n < nodes; ++n) alpha.at(n, 0) = 1;
	params_.add("alpha", std::move(alpha));
	params_.add("beta", Tensor(Shape{edges_.size()}, Real{0}));
}

double Arnet::predict_step(NodeId node, const std::vector<double>& lags,
                           const std::vector<double>& neighbor_values) const {
	const Tensor& alpha = params_.at("alpha").value;
	const Tensor& beta = params_.at("beta").value;
	const auto& in = in_edges_.at(node);
	if (lags.size() != lags_ || neighbor_values.size() != in.size()) throw ShapeError("ARNet input sizes");
	double out = 0;
	for (std::size_t k = 0; k < lags_; ++k) out += alpha.at(node, k) * lags[k];
	for (std::size_t i = 0; i < in.size(); ++i) out += beta[in[i]] * neighbor_values[i];
	return out;
}

std::vector<double> Arnet::predict(const Dataset& data, NodeId node, std::size_t horizon_start,
                                   std::size_t horizon) const {
	check_horizon(data, node, horizon_start, horizon, lags_);
	if (data.dim() != 1) throw ConfigError("ARNet handles univariate series only");
	std::vector<double> lags(lags_);
	for (std::size_t k = 0; k < lags_; ++k) lags[k] = data.filled.value(node, horizon_start - 1 - k);
	const auto& in = in_edges_.at(node);
	std::vector<double> out(horizon), nb(in.size());
	for (std::size_t h = 0; h < horizon; ++h) {
		for (std::size_t i = 0; i < in.size(); ++i) nb[i] = data.filled.value(edges_[in[i]].src, horizon_start + h);
		out[h] = std::max(0.0, predict_step(node, lags, nb));
		lags.insert(lags.begin(), out[h]);
		lags.pop_back();
	}
	return out;
}

std::vector<Edge> collapse_to_static(const DynamicGraph& graph, std::size_t t0, std::size_t t1, double threshold) {
	if (t1 <= t0) throw ConfigError("empty range for static collapse");
	std::vector<Edge> out;
	for (NodeId dst = 0; dst < graph.nodes(); ++dst) {
		for (NodeId src : graph.in_neighbors_ever(dst)) {
			if (src == dst) continue;
			const double frac = static_cast<double>(graph.presence(src, dst, t0, t1)) / static_cast<double>(t1 - t0);
			if (frac >= threshold) out.push_back({src, dst, 0, graph.steps()});
		}
	}
	return out;
}

Arnet arnet_fit(const Dataset& data, const ArnetConfig& config) {
	config.optim.validate();
	if (data.dim() != 1) throw ConfigError("ARNet handles univariate series only");
	const std::size_t p = config.lags;
	if (config.train_end > data.steps() || config.train_end <= p) throw DataError("ARNet needs more than p steps of history");
	Arnet net(data.nodes(), p, collapse_to_static(data.graph, 0, config.train_end, config.presence_threshold));
	AdamW adam(config.optim);
	Rng rng = derive_rng(config.optim.seed, 3);
	ad::ParameterSet& params = net.parameters();
	Tensor& ga = params.at("alpha").grad;
	Tensor& gb = params.at("beta").grad;
	const std::size_t targets = config.train_end - p;
	std::vector<double> lags(p), nb;
	for (std::size_t step = 1; step <= config.optim.total_steps(); ++step) {
		params.zero_grad();
		for (std::size_t b = 0; b < config.optim.batch_size; ++b) {
			const auto node = static_cast<NodeId>(uniform_index(rng, data.nodes()));
			const std::size_t t = p + uniform_index(rng, targets);
			for (std::size_t k = 0; k < p; ++k) lags[k] = data.filled.value(node, t - 1 - k);
			const auto& in = net.in_edges(node);
			nb.resize(in.size());
			for (std::size_t i = 0; i < in.size(); ++i) nb[i] = data.filled.value(net.edges()[in[i]].src, t);
			const double pred = net.predict_step(node, lags, nb), v = data.filled.value(node, t);
			// d/dpred of 100 |v - pred| / (0.5 (|v| + |pred|) + delta)
			const double a = v - pred, s = 0.5 * (std::abs(v) + std::abs(pred)) + kSmapeDelta;
			const double sign_a = (a > 0) - (a < 0), sign_p = (pred > 0) - (pred < 0);
			const double dpred = 100.0 * (-sign_a * s - std::abs(a) * 0.5 * sign_p) / (s * s) /
			                     static_cast<double>(config.optim.batch_size);
			for (std::size_t k = 0; k < p; ++k) ga.at(node, k) += static_cast<Real>(dpred * lags[k]);
			for (std::size_t i = 0; i < in.size(); ++i) gb[in[i]] += static_cast<Real>(dpred * nb[i]);
		}
		ad::clip_global_norm(params, config.optim.clip_norm);
		adam.step(params, lr_at(config.optim, step));
	}
	return net;
}

// ---- model evaluation -------------------------------------------------------

double AttentionStep::mean_weight(std::size_t slot) const {
	const std::size_t width = neighbors.size() + 1;
	double total = 0;
	for (std::size_t h = 0; h < heads; ++h) total += weights[h * width + slot];
	return heads ? total / static_cast<double>(heads) : 0.0;
}

EvalResult evaluate(const RadflowModel& model, const Dataset& data, const EvalOptions& options) {
	const ModelConfig& cfg = model.config();
	const std::size_t B = cfg.backcast, F = cfg.horizon, D = cfg.dim;
	if (options.horizon_start < B || options.horizon_start + F > data.steps()) {
		throw DataError("evaluation horizon [" + std::to_string(options.horizon_start) + ", " +
		                std::to_string(options.horizon_start + F) + ") does not fit after a backcast of " +
		                std::to_string(B) + " in " + std::to_string(data.steps()) + " steps");
	}
	std::vector<NodeId> nodes;
	if (options.nodes) nodes = *options.nodes;
	else
		for (NodeId n = 0; n < data.nodes(); ++n) nodes.push_back(n);
	if (nodes.empty()) throw DataError("no nodes to evaluate");

	std::optional<NeighborForecasts> forecasts;
	if (options.setting == Setting::forecast && cfg.hops > 0) {
		if (!options.forecast_model) throw ConfigError("the forecast setting needs a hops = 0 model for neighbours");
		forecasts.emplace(*options.forecast_model, data);
	}
	const SeriesPanel& truth_panel = options.truth ? *options.truth : data.filled;
	if (truth_panel.nodes() != data.nodes() || truth_panel.steps() != data.steps()) {
		throw DataError("truth panel does not match the data");
	}

	EvalResult result;
	const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
	for (std::size_t first = 0; first < nodes.size(); first += batch) {
		std::vector<WindowRef> windows;
		for (std::size_t i = first; i < std::min(nodes.size(), first + batch); ++i)
			windows.push_back({nodes[i], options.horizon_start - B});
		EpisodeOptions eo;
		eo.setting = options.setting;
		eo.forecasts = forecasts ? &*forecasts : nullptr;
		BuiltEpisode built = build_episode(data, cfg, windows, eo);
		ad::Tape tape(false);
		ForwardOptions fo;
		fo.keep_layers = options.keep_layers;
		ForwardResult out = model.forward(tape, built.episode, fo);
		for (std::size_t b = 0; b < windows.size(); ++b) {
			ForecastBundle bundle;
			bundle.node = windows[b].ego;
			bundle.horizon_start = options.horizon_start;
			bundle.pred.resize(F * D);
			bundle.truth.resize(F * D);
			bundle.recurrent.resize(F * D);
			bundle.network.assign(F * D, 0.0);
			if (options.keep_layers) bundle.layers.assign(cfg.layers, std::vector<double>(F * D));
			for (std::size_t k = 0; k < F; ++k) {
				const StepOutput& s = out.steps[k];
				for (std::size_t d = 0; d < D; ++d) {
					bundle.pred[k * D + d] = from_log(s.prediction.value().at(b, d));
					bundle.truth[k * D + d] = truth_panel.value(bundle.node, options.horizon_start + k, d);
					bundle.recurrent[k * D + d] = s.recurrent.value().at(b, d);
					if (s.network.valid()) bundle.network[k * D + d] = s.network.value().at(b, d);
					for (std::size_t l = 0; l < s.layers.size(); ++l) bundle.layers[l][k * D + d] = s.layers[l].at(b, d);
				}
				if (options.keep_attention && built.episode.hop1) {
					const NeighborLevel& h1 = *built.episode.hop1;
					AttentionStep a;
					a.neighbors.assign(h1.ids.begin() + static_cast<std::ptrdiff_t>(b * h1.slots),
					                   h1.ids.begin() + static_cast<std::ptrdiff_t>((b + 1) * h1.slots));
					a.present.assign(h1.present[k].begin() + static_cast<std::ptrdiff_t>(b * h1.slots),
					                 h1.present[k].begin() + static_cast<std::ptrdiff_t>((b + 1) * h1.slots));
					if (s.attention.size() > 0) {
						a.heads = cfg.heads;
						const std::size_t width = (h1.slots + 1) * cfg.heads;
						a.weights.assign(s.attention.data() + b * width, s.attention.data() + (b + 1) * width);
					}
					bundle.attention.push_back(std::move(a));
				}
			}
			result.bundles.push_back(std::move(bundle));
		}
	}
	std::vector<std::vector<double>> preds, truths;
	for (const auto& bundle : result.bundles) {
		preds.push_back(bundle.pred);
		truths.push_back(bundle.truth);
	}
	result.report = compute_metrics(preds, truths, options.metric);
	return result;
}

std::map<std::string, MetricReport> grouped_metrics(const EvalResult& result, const std::vector<std::string>& keys,
                                                    const MetricOptions& options) {
	if (keys.size() != result.bundles.size()) throw ShapeError("one group key per bundle");
	std::map<std::string, std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>> groups;
	for (std::size_t i = 0; i < keys.size(); ++i) {
		groups[keys[i]].first.push_back(result.bundles[i].pred);
		groups[keys[i]].second.push_back(result.bundles[i].truth);
	}
	std::map<std::string, MetricReport> out;
	for (const auto& [key, g] : groups) out.emplace(key, compute_metrics(g.first, g.second, options));
	return out;
}

std::string popularity_bucket(double mean) {
	if (!(mean >= 1)) return "0";
	const int e = static_cast<int>(std::floor(std::log10(mean)));
	return "1e" + std::to_string(e) + "-1e" + std::to_string(e + 1);
}

double mean_value(const SeriesPanel& panel, NodeId node, std::size_t t0, std::size_t t1) {
	if (t1 <= t0 || t1 > panel.steps()) throw DataError("bad range for a mean value");
	double total = 0;
	for (std::size_t t = t0; t < t1; ++t) total += panel.total(node, t);
	return total / static_cast<double>(t1 - t0);
}

std::vector<LayerContribution> summarize_layers(const EvalResult& result, std::size_t dim, std::size_t dim_index) {
	if (result.bundles.empty() || result.bundles[0].layers.empty()) {
		throw ConfigError("layer summaries need bundles evaluated with keep_layers");
	}
	if (dim_index >= dim) throw ConfigError("dimension index out of range");
	const std::size_t L = result.bundles[0].layers.size(), F = result.bundles[0].layers[0].size() / dim;
	const std::size_t n = result.bundles.size();
	const double q = n > 1 ? boost::math::quantile(boost::math::complement(
	                             boost::math::students_t(static_cast<double>(n - 1)), 0.025))
	                       : 0.0;
	std::vector<LayerContribution> out;
	for (std::size_t l = 0; l < L; ++l) {
		for (std::size_t k = 0; k < F; ++k) {
			double sum = 0, sq = 0;
			for (const auto& b : result.bundles) sum += b.layers.at(l).at(k * dim + dim_index);
			const double mean = sum / static_cast<double>(n);
			for (const auto& b : result.bundles) {
				const double d = b.layers[l][k * dim + dim_index] - mean;
				sq += d * d;
			}
			const double half = n > 1 ? q * std::sqrt(sq / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
			out.push_back({l, k, mean, mean - half, mean + half, n});
		}
	}
	return out;
}

// ---- significance and analysis ----------------------------------------------

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
	if (a.size() != b.size()) throw ConfigError("paired t-test needs equal-length samples");
	const std::size_t n = a.size();
	if (n < 2) throw ConfigError("paired t-test needs at least two pairs");
	std::vector<double> d(n);
	for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
	const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
	double ss = 0;
	for (double x : d) ss += (x - mean) * (x - mean);
	TTestResult r;
	r.n = n;
	if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0; })) return r;
	const double sd = std::sqrt(ss / static_cast<double>(n - 1));
	if (sd == 0) {
		r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
		r.p = 0;
		return r;
	}
	r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
	const boost::math::students_t dist(static_cast<double>(n - 1));
	r.p = std::min(1.0, 2 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
	return r;
}

namespace {

void check_fraction(double f) {
	if (!(f >= 0 && f <= 1)) throw ConfigError("deletion fraction " + std::to_string(f) + " outside [0, 1]");
}

// First `count` entries of a seeded shuffle of [0, n); prefixes are nested
// across fractions, so a larger fraction deletes a superset.
std::vector<std::size_t> seeded_prefix(std::size_t n, double fraction, std::uint64_t seed, std::uint64_t stream) {
	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), 0);
	Rng rng = derive_rng(seed, stream);
	for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
	order.resize(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
	return order;
}

} // namespace

SeriesPanel drop_values(const SeriesPanel& raw, double fraction, std::uint64_t seed) {
	check_fraction(fraction);
	SeriesPanel out = raw;
	for (std::size_t cell : seeded_prefix(raw.nodes() * raw.steps(), fraction, seed, 10))
		out.set_missing(cell / raw.steps(), cell % raw.steps(), true);
	return out;
}

std::vector<Edge> drop_edges(const DynamicGraph& graph, double fraction, std::uint64_t seed) {
	check_fraction(fraction);
	const std::vector<Edge> edges = graph.edges();
	// edges come grouped by (dst, src); a pair is dropped with all its intervals
	std::vector<std::size_t> pair_of(edges.size());
	std::size_t pairs = 0;
	for (std::size_t i = 0; i < edges.size(); ++i) {
		if (i > 0 && (edges[i].src != edges[i - 1].src || edges[i].dst != edges[i - 1].dst)) ++pairs;
		pair_of[i] = pairs;
	}
	if (!edges.empty()) ++pairs;
	std::vector<std::uint8_t> dropped(pairs, 0);
	for (std::size_t p : seeded_prefix(pairs, fraction, seed, 11)) dropped[p] = 1;
	std::vector<Edge> kept;
	for (std::size_t i = 0; i < edges.size(); ++i)
		if (!dropped[pair_of[i]]) kept.push_back(edges[i]);
	return kept;
}

std::vector<RobustnessPoint> robustness_sweep(const RadflowModel& model, const Dataset& data, const EvalOptions& options,
                                              const std::vector<double>& value_fractions,
                                              const std::vector<double>& edge_fractions, std::uint64_t seed) {
	if (options.setting != Setting::imputation) throw ConfigError("robustness sweeps run in the imputation setting");
	for (double f : value_fractions) check_fraction(f);
	for (double f : edge_fractions) check_fraction(f);
	std::vector<RobustnessPoint> out;
	EvalOptions eo = options;
	eo.truth = options.truth ? options.truth : &data.filled;
	for (double f : value_fractions) {
		Dataset perturbed(drop_values(data.raw, f, seed), data.graph);
		out.push_back({"values", f, evaluate(model, perturbed, eo).report.smape});
	}
	for (double f : edge_fractions) {
		Dataset perturbed(data.raw, DynamicGraph(data.nodes(), data.steps(), drop_edges(data.graph, f, seed)));
		out.push_back({"edges", f, evaluate(model, perturbed, eo).report.smape});
	}
	return out;
}

CounterfactualRecord counterfactual_double(const RadflowModel& model, const Dataset& data, NodeId ego,
                                           NodeId neighbor, std::size_t day, std::size_t horizon_start) {
	const ModelConfig& cfg = model.config();
	if (cfg.hops == 0) throw ConfigError("counterfactuals need a model with network inputs");
	if (day < horizon_start || day >= horizon_start + cfg.horizon) throw DataError("day lies outside the horizon");
	if (!data.graph.has_edge(neighbor, ego, day)) {
		throw DataError("node " + std::to_string(neighbor) + " is not a neighbour of " + std::to_string(ego) +
		                " on step " + std::to_string(day));
	}
	EvalOptions eo;
	eo.horizon_start = horizon_start;
	eo.nodes = std::vector<NodeId>{ego};
	eo.keep_attention = true;
	const std::size_t k = day - horizon_start;

	auto attention_of = [&](const ForecastBundle& b) {
		const AttentionStep& a = b.attention.at(k);
		for (std::size_t s = 0; s < a.neighbors.size(); ++s)
			if (a.neighbors[s] == static_cast<std::int64_t>(neighbor)) return a.heads ? a.mean_weight(s) : 0.0;
		throw DataError("node " + std::to_string(neighbor) + " was not selected as a neighbour of " +
		                std::to_string(ego));
	};
	const EvalResult before = evaluate(model, data, eo);
	SeriesPanel raw = data.raw;
	for (std::size_t d = 0; d < raw.dim(); ++d) raw.value(neighbor, day, d) = 2 * data.filled.value(neighbor, day, d);
	raw.set_missing(neighbor, day, false);
	Dataset doubled(std::move(raw), data.graph);
	eo.truth = &data.filled;
	const EvalResult after = evaluate(model, doubled, eo);

	CounterfactualRecord r;
	r.ego = ego;
	r.neighbor = neighbor;
	r.day = day;
	r.attention_before = attention_of(before.bundles[0]);
	r.attention_after = attention_of(after.bundles[0]);
	r.forecast_before = before.bundles[0].pred[k * cfg.dim];
	r.forecast_after = after.bundles[0].pred[k * cfg.dim];
	const double diff = r.forecast_after - r.forecast_before;
	r.relative_change = r.forecast_before != 0 ? diff / std::abs(r.forecast_before) : diff;
	return r;
}

double network_contribution(const ForecastBundle& bundle) {
	if (bundle.recurrent.size() != bundle.network.size()) throw ShapeError("bundle terms differ in length");
	if (bundle.network.empty()) return 0.0;
	double total = 0;
	for (std::size_t i = 0; i < bundle.network.size(); ++i) {
		const double a = std::abs(bundle.network[i]), r = std::abs(bundle.recurrent[i]);
		total += a / (r + a + kSmapeDelta);
	}
	return total / static_cast<double>(bundle.network.size());
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
	if (x.size() != y.size() || x.size() < 2) throw ShapeError("pearson needs two equal series of length >= 2");
	const double n = static_cast<double>(x.size());
	const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
	double sxy = 0, sxx = 0, syy = 0;
	for (std::size_t i = 0; i < x.size(); ++i) {
		sxy += (x[i] - mx) * (y[i] - my);
		sxx += (x[i] - mx) * (x[i] - mx);
		syy += (y[i] - my) * (y[i] - my);
	}
	if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
	return sxy / std::sqrt(sxx * syy);
}

std::vector<CorrelationRecord> attention_correlation(const RadflowModel& model, const Dataset& data,
                                                     const EvalOptions& options) {
	if (model.config().hops == 0 || model.config().variant != Variant::attention) {
		throw ConfigError("attention statistics need an attention model with network inputs");
	}
	EvalOptions eo = options;
	eo.keep_attention = true;
	const EvalResult res = evaluate(model, data, eo);
	const SeriesPanel& truth = options.truth ? *options.truth : data.filled;
	const std::size_t F = model.config().horizon, D = model.config().dim;
	std::vector<CorrelationRecord> out;
	for (const auto& bundle : res.bundles) {
		if (bundle.attention.empty()) continue;
		const auto& slots = bundle.attention[0].neighbors;
		for (std::size_t s = 0; s < slots.size(); ++s) {
			if (slots[s] < 0) continue;
			const auto nb = static_cast<NodeId>(slots[s]);
			double weight = 0;
			std::size_t present = 0;
			for (const auto& step : bundle.attention) {
				if (!step.present[s]) continue;
				weight += step.mean_weight(s);
				++present;
			}
			if (present == 0) continue;
			std::vector<double> x(F * D), y(F * D);
			for (std::size_t k = 0; k < F; ++k) {
				for (std::size_t d = 0; d < D; ++d) {
					x[k * D + d] = truth.value(bundle.node, bundle.horizon_start + k, d);
					y[k * D + d] = truth.value(nb, bundle.horizon_start + k, d);
				}
			}
			CorrelationRecord r{bundle.node, nb, pearson(x, y), weight / static_cast<double>(present), true};
			if (std::isnan(r.correlation)) {
				r.defined = false;
				r.correlation = 0;
			}
			out.push_back(r);
		}
	}
	return out;
}

} // namespace radflow
