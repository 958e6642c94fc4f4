#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radflow/dataset.hpp"
#include "radflow/model.hpp"
#include "radflow/training.hpp"

namespace radflow {

// ---- metrics ------------------------------------------------------------

struct MetricOptions {
	// Drop terms whose truth is 0 before averaging.
	bool nonzero_only = false;
};

// 100 |v - v_hat| / ((|v| + |v_hat|) / 2), taken as 0 when both are 0.
double smape_term(double truth, double pred);

struct MetricReport {
	double smape = 0, rmse = 0, mae = 0;
	std::size_t samples = 0; // series evaluated
	std::size_t terms = 0;   // values averaged over
	std::vector<double> node_smape, node_rmse, node_mae;
};

// preds[j] and truths[j] hold the F * D raw-scale values of sample j.
MetricReport compute_metrics(const std::vector<std::vector<double>>& preds,
                             const std::vector<std::vector<double>>& truths, const MetricOptions& options = {});
double smape_metric(const std::vector<double>& pred, const std::vector<double>& truth, const MetricOptions& options = {});
double rmse_metric(const std::vector<double>& pred, const std::vector<double>& truth, const MetricOptions& options = {});
double mae_metric(const std::vector<double>& pred, const std::vector<double>& truth, const MetricOptions& options = {});

// ---- baselines ------------------------------------------------------------

// Repeats the last value before `horizon_start`, F x D values.
std::vector<double> baseline_copy_step(const Dataset& data, NodeId node, std::size_t horizon_start, std::size_t horizon);
// Tiles the final `period` observations before `horizon_start`.
std::vector<double> baseline_copy_week(const Dataset& data, NodeId node, std::size_t horizon_start, std::size_t horizon,
                                       std::size_t period = 7);

struct ArnetConfig {
	std::size_t lags = 7;
	// Dynamic edges present at least this fraction of the training steps
	// become static edges.
	double presence_threshold = 0.5;
	OptimConfig optim = default_optim();
	std::size_t train_end = 0; // fit on targets before this step

	static OptimConfig default_optim();
};

// AR(p) per node plus a weighted sum of neighbours' same-step values, on the
// raw scale, over a static graph.
class Arnet {
public:
	Arnet(std::size_t nodes, std::size_t lags, std::vector<Edge> static_edges);

	std::size_t lags() const { return lags_; }
	const std::vector<Edge>& edges() const { return edges_; }
	ad::ParameterSet& parameters() { return params_; }
	Real& alpha(NodeId node, std::size_t k) { return params_.at("alpha").value.at(node, k); }
	Real& beta(std::size_t edge) { return params_.at("beta").value[edge]; }

	// One step at t from the given lags (most recent first) and the
	// neighbours' values at t.
	double predict_step(NodeId node, const std::vector<double>& lags, const std::vector<double>& neighbor_values) const;
	// Imputation-mode horizon: own lags roll forward with the predictions,
	// neighbour values are observed.
	std::vector<double> predict(const Dataset& data, NodeId node, std::size_t horizon_start, std::size_t horizon) const;
	// Edges into `node`, as indices into edges().
	const std::vector<std::size_t>& in_edges(NodeId node) const { return in_edges_[node]; }

private:
	std::size_t lags_;
	std::vector<Edge> edges_;
	std::vector<std::vector<std::size_t>> in_edges_;
	ad::ParameterSet params_;
};

std::vector<Edge> collapse_to_static(const DynamicGraph& graph, std::size_t t0, std::size_t t1, double threshold);
Arnet arnet_fit(const Dataset& data, const ArnetConfig& config);

// ---- model evaluation -------------------------------------------------------

struct AttentionStep {
	std::vector<std::int64_t> neighbors; // slot ids, -1 for padding
	std::vector<std::uint8_t> present;
	std::size_t heads = 0;
	std::vector<double> weights; // heads x (slots + 1), null slot last
	double mean_weight(std::size_t slot) const;
};

struct ForecastBundle {
	NodeId node = 0;
	std::size_t horizon_start = 0;
	std::vector<double> pred;      // F x D raw
	std::vector<double> truth;     // F x D raw
	std::vector<double> recurrent; // F x D log-space recurrent term
	std::vector<double> network;   // F x D log-space network term, zero without neighbours
	std::vector<std::vector<double>> layers; // L x (F x D), when requested
	std::vector<AttentionStep> attention;    // per horizon step, when requested
};

struct EvalOptions {
	Setting setting = Setting::imputation;
	std::size_t horizon_start = 0;
	std::optional<std::vector<NodeId>> nodes; // default: all
	const RadflowModel* forecast_model = nullptr; // hops = 0 model for the forecast setting
	std::size_t batch_size = 64;
	bool keep_layers = false;
	bool keep_attention = false;
	MetricOptions metric;
	// Ground truth when the inputs were perturbed; defaults to data.filled.
	const SeriesPanel* truth = nullptr;
};

struct EvalResult {
	MetricReport report;
	std::vector<ForecastBundle> bundles;
};

EvalResult evaluate(const RadflowModel& model, const Dataset& data, const EvalOptions& options);

// Metrics per group; keys[i] labels bundles[i].
std::map<std::string, MetricReport> grouped_metrics(const EvalResult& result, const std::vector<std::string>& keys,
                                                    const MetricOptions& options = {});
// log10-spaced bucket of a mean raw value, e.g. "1e2-1e3"; "0" below 1.
std::string popularity_bucket(double mean_value);
// Mean raw value of a node over [t0, t1).
double mean_value(const SeriesPanel& panel, NodeId node, std::size_t t0, std::size_t t1);

// Per-layer contribution to the recurrent forecast, averaged across nodes
// with a 95% t interval. Needs bundles evaluated with keep_layers.
struct LayerContribution {
	std::size_t layer = 0, step = 0;
	double mean = 0, ci_low = 0, ci_high = 0;
	std::size_t n = 0;
};
std::vector<LayerContribution> summarize_layers(const EvalResult& result, std::size_t dim = 1, std::size_t dim_index = 0);

// ---- significance and analysis ----------------------------------------------

struct TTestResult {
	double t = 0;
	double p = 1;
	std::size_t n = 0;
};

// Dependent t-test for paired samples, two-sided, n - 1 degrees of freedom.
// All-zero differences give p = 1; zero spread with nonzero mean gives p = 0.
TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

struct RobustnessPoint {
	std::string kind; // "values" or "edges"
	double fraction = 0;
	double smape = 0;
};

SeriesPanel drop_values(const SeriesPanel& raw, double fraction, std::uint64_t seed);
std::vector<Edge> drop_edges(const DynamicGraph& graph, double fraction, std::uint64_t seed);

std::vector<RobustnessPoint> robustness_sweep(const RadflowModel& model, const Dataset& data, const EvalOptions& options,
                                              const std::vector<double>& value_fractions,
                                              const std::vector<double>& edge_fractions, std::uint64_t seed);

struct CounterfactualRecord {
	NodeId ego = 0, neighbor = 0;
	std::size_t day = 0; // absolute step
	double attention_before = 0, attention_after = 0;
	double forecast_before = 0, forecast_after = 0; // raw ego forecast at `day`, first dimension
	double relative_change = 0;
};

CounterfactualRecord counterfactual_double(const RadflowModel& model, const Dataset& data, NodeId ego,
                                           NodeId neighbor, std::size_t day, std::size_t horizon_start);

// Mean over the horizon of |A| / (|R| + |A| + delta) on the log-space terms.
double network_contribution(const ForecastBundle& bundle);

struct CorrelationRecord {
	NodeId ego = 0, neighbor = 0;
	double correlation = 0;
	double mean_attention = 0;
	bool defined = true; // false when either series is constant
};

double pearson(const std::vector<double>& x, const std::vector<double>& y);
std::vector<CorrelationRecord> attention_correlation(const RadflowModel& model, const Dataset& data,
                                                     const EvalOptions& options);

} // namespace radflow
