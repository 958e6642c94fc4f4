#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "radflow/autodiff.hpp"
#include "radflow/dataset.hpp"
#include "radflow/model.hpp"

namespace radflow {

struct OptimConfig {
	double beta1 = 0.9;
	double beta2 = 0.999;
	double eps = 1e-8;
	double weight_decay = 1e-4;
	double peak_lr = 1e-4;
	std::size_t warmup_steps = 5000;
	std::size_t epochs = 10;
	std::size_t steps_per_epoch = 10000;
	double clip_norm = 0.1;
	std::size_t batch_size = 64;
	std::size_t neighbors = 4; // sampled per ego during training
	std::uint64_t seed = 0;

	void validate() const;
	std::size_t total_steps() const { return warmup_steps + epochs * steps_per_epoch; }
	bool operator==(const OptimConfig&) const = default;
};

void to_json(nlohmann::json& j, const OptimConfig& c);
void from_json(const nlohmann::json& j, OptimConfig& c);

// Linear warmup to peak_lr, then linear decay reaching 0 at total_steps().
double lr_at(const OptimConfig& config, std::size_t step);

constexpr double kSmapeDelta = 1e-8;

// Mean of 100 |v - v_hat| / (0.5 (|v| + |v_hat|) + delta) with v_hat the
// raw-scale forecast max(0, expm1(pred_log)).
ad::Var smape_loss(ad::Tape& tape, ad::Var pred_log, const Tensor& truth_raw);
ad::Var smape_loss(ad::Tape& tape, const std::vector<ad::Var>& pred_log, const std::vector<Tensor>& truth_raw);

// Adam with decoupled weight decay: theta *= 1 - lr * wd, then the Adam step.
class AdamW {
public:
	explicit AdamW(const OptimConfig& config) : config_(config) {}
	void step(ad::ParameterSet& params, double lr);
	std::size_t steps() const { return t_; }

private:
	OptimConfig config_;
	std::size_t t_ = 0;
	std::vector<Tensor> m_, v_;
};

struct TrainLogEntry {
	std::size_t step = 0;
	double lr = 0;
	double loss = 0;
	double grad_norm = 0;
	double wall_ms = 0;
};

struct TimeSplit {
	// Training windows must end at or before this step.
	std::size_t train_end = 0;
	// Validation forecasts cover [val_start, val_start + F).
	std::size_t val_start = 0;
};

struct FitOptions {
	TimeSplit split;
	std::optional<std::vector<NodeId>> train_nodes; // default: all nodes
	std::optional<std::vector<NodeId>> val_nodes;   // default: train_nodes
	std::optional<std::filesystem::path> checkpoint_dir;
	std::function<void(const TrainLogEntry&)> on_step;
	std::size_t log_every = 1;
};

struct FitResult {
	RadflowModel model;                // parameters of the best validation epoch
	std::vector<TrainLogEntry> log;    // every log_every-th step
	std::vector<double> val_smape;     // per epoch
	std::size_t best_epoch = 0;
};

FitResult fit(const Dataset& data, const ModelConfig& model_config, const OptimConfig& optim, const FitOptions& options);

// Every valid window start for training, i.e. start + B + F <= train_end.
std::size_t training_offsets(const ModelConfig& config, std::size_t train_end);

} // namespace radflow
