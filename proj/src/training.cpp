#include "radflow/training.hpp"

#include <chrono>
#include <cmath>

#include "radflow/errors.hpp"
#include "radflow/eval.hpp"

namespace radflow {

void OptimConfig::validate() const {
	if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1)) throw ConfigError("betas must lie in (0, 1)");
	if (!(eps > 0)) throw ConfigError("eps must be positive");
	if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be non-negative");
	if (!(peak_lr >= 0)) throw ConfigError("peak_lr must be non-negative");
	if (!(clip_norm > 0)) throw ConfigError("clip_norm must be positive");
	if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
	if (epochs < 1 || steps_per_epoch < 1) throw ConfigError("epochs and steps_per_epoch must be >= 1");
	if (warmup_steps > total_steps()) throw ConfigError("warmup_steps exceeds the total number of steps");
}

void to_json(nlohmann::json& j, const OptimConfig& c) {
	j = nlohmann::json{{"beta1", c.beta1},
	                   {"beta2", c.beta2},
	                   {"eps", c.eps},
	                   {"weight_decay", c.weight_decay},
	                   {"peak_lr", c.peak_lr},
	                   {"warmup_steps", c.warmup_steps},
	                   {"epochs", c.epochs},
	                   {"steps_per_epoch", c.steps_per_epoch},
	                   {"clip_norm", c.clip_norm},
	                   {"batch_size", c.batch_size},
	                   {"neighbors", c.neighbors},
	                   {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, OptimConfig& c) {
	c.beta1 = j.at("beta1").get<double>();
	c.beta2 = j.at("beta2").get<double>();
	c.eps = j.at("eps").get<double>();
	c.weight_decay = j.at("weight_decay").get<double>();
	c.peak_lr = j.at("peak_lr").get<double>();
	c.warmup_steps = j.at("warmup_steps").get<std::size_t>();
	c.epochs = j.at("epochs").get<std::size_t>();
	c.steps_per_epoch = j.at("steps_per_epoch").get<std::size_t>();
	c.clip_norm = j.at("clip_norm").get<double>();
	c.batch_size = j.at("batch_size").get<std::size_t>();
	c.neighbors = j.at("neighbors").get<std::size_t>();
	c.seed = j.at("seed").get<std::uint64_t>();
}

double lr_at(const OptimConfig& config, std::size_t step) {
	const double peak = config.peak_lr;
	const std::size_t warm = config.warmup_steps, total = config.total_steps();
	if (step < warm) return peak * static_cast<double>(step) / static_cast<double>(warm);
	if (step >= total) return 0.0;
	return peak * static_cast<double>(total - step) / static_cast<double>(total - warm);
}

ad::Var smape_loss(ad::Tape& tape, ad::Var pred_log, const Tensor& truth_raw) {
	return smape_loss(tape, std::vector<ad::Var>{pred_log}, std::vector<Tensor>{truth_raw});
}

ad::Var smape_loss(ad::Tape& tape, const std::vector<ad::Var>& pred_log, const std::vector<Tensor>& truth_raw) {
	if (pred_log.size() != truth_raw.size() || pred_log.empty()) throw ShapeError("smape_loss: step count mismatch");
	ad::Var total;
	std::size_t count = 0;
	for (std::size_t k = 0; k < pred_log.size(); ++k) {
		const Tensor& truth = truth_raw[k];
		if (pred_log[k].value().shape() != truth.shape()) {
			throw ShapeError("smape_loss: prediction " + shape_string(pred_log[k].value().shape()) + " vs truth " +
			                 shape_string(truth.shape()));
		}
		// Unclamped expm1: clamping at 0 would zero the gradient of every
		// negative log prediction.
		ad::Var raw = ad::expm1(pred_log[k]);
		ad::Var v = tape.constant(truth);
		Tensor abs_truth = truth;
		for (Real& x : abs_truth.values()) x = std::abs(x);
		ad::Var denom = ad::add_scalar(ad::scale(ad::add(ad::abs(raw), tape.constant(abs_truth)), 0.5), kSmapeDelta);
		ad::Var term = ad::div(ad::abs(ad::sub(raw, v)), denom);
		ad::Var s = ad::sum(term);
		total = total.valid() ? ad::add(total, s) : s;
		count += truth.size();
	}
	return ad::scale(total, 100.0 / static_cast<double>(count));
}

void AdamW::step(ad::ParameterSet& params, double lr) {
	if (m_.empty()) {
		for (std::size_t i = 0; i < params.size(); ++i) {
			m_.push_back(Tensor::zeros_like(params[i].value));
			v_.push_back(Tensor::zeros_like(params[i].value));
		}
	}
	if (m_.size() != params.size()) throw ShapeError("optimizer state does not match the parameter set");
	++t_;
	const double b1 = config_.beta1, b2 = config_.beta2;
	const double c1 = 1 - std::pow(b1, static_cast<double>(t_)), c2 = 1 - std::pow(b2, static_cast<double>(t_));
	const double shrink = 1 - lr * config_.weight_decay;
	for (std::size_t i = 0; i < params.size(); ++i) {
		ad::Parameter& p = params[i];
		if (p.grad.shape() != p.value.shape() || m_[i].shape() != p.value.shape()) {
			throw ShapeError("gradient shape mismatch for " + p.name);
		}
		auto theta = p.value.values();
		auto g = p.grad.values();
		auto m = m_[i].values();
		auto v = v_[i].values();
		for (std::size_t k = 0; k < theta.size(); ++k) {
			theta[k] = static_cast<Real>(theta[k] * shrink);
			m[k] = static_cast<Real>(b1 * m[k] + (1 - b1) * g[k]);
			v[k] = static_cast<Real>(b2 * v[k] + (1 - b2) * g[k] * g[k]);
			const double mhat = m[k] / c1, vhat = v[k] / c2;
			theta[k] = static_cast<Real>(theta[k] - lr * mhat / (std::sqrt(vhat) + config_.eps));
		}
	}
}

std::size_t training_offsets(const ModelConfig& config, std::size_t train_end) {
	const std::size_t span = config.backcast + config.horizon;
	return train_end >= span ? train_end - span + 1 : 0;
}

FitResult fit(const Dataset& data, const ModelConfig& model_config, const OptimConfig& optim, const FitOptions& options) {
	model_config.validate();
	optim.validate();
	const std::size_t B = model_config.backcast, F = model_config.horizon;
	if (data.steps() < B + F) throw DataError("series are shorter than backcast + horizon");
	if (options.split.train_end > data.steps()) throw DataError("train_end lies past the end of the data");
	const std::size_t offsets = training_offsets(model_config, options.split.train_end);
	if (offsets == 0) throw DataError("training range is shorter than backcast + horizon");
	if (options.split.val_start < B || options.split.val_start + F > data.steps()) {
		throw DataError("validation window does not fit in the data");
	}

	std::vector<NodeId> train_nodes;
	if (options.train_nodes) train_nodes = *options.train_nodes;
	else
		for (NodeId n = 0; n < data.nodes(); ++n) train_nodes.push_back(n);
	if (train_nodes.empty()) throw DataError("no training nodes");
	const std::vector<NodeId> val_nodes = options.val_nodes ? *options.val_nodes : train_nodes;

	FitResult result{RadflowModel(model_config, optim.seed), {}, {}, 0};
	RadflowModel model = result.model;
	AdamW adam(optim);
	// Separate streams so models with and without network inputs see the same
	// sequence of training windows.
	Rng rng = derive_rng(optim.seed, 2);
	Rng neighbor_rng = derive_rng(optim.seed, 4);
	Rng dropout_rng = derive_rng(optim.seed, 5);
	double best = std::numeric_limits<double>::infinity();
	std::size_t step = 0;
	const auto clock_start = std::chrono::steady_clock::now();

	for (std::size_t epoch = 0; epoch < optim.epochs; ++epoch) {
		const std::size_t epoch_steps = epoch == 0 ? optim.warmup_steps + optim.steps_per_epoch : optim.steps_per_epoch;
		for (std::size_t i = 0; i < epoch_steps; ++i) {
			++step;
			std::vector<WindowRef> windows(optim.batch_size);
			for (auto& w : windows) {
				w.ego = train_nodes[uniform_index(rng, train_nodes.size())];
				w.start = uniform_index(rng, offsets);
			}
			EpisodeOptions eo;
			eo.train_sampling = true;
			eo.k = optim.neighbors;
			eo.rng = &neighbor_rng;
			BuiltEpisode built = build_episode(data, model_config, windows, eo);
			model.parameters().zero_grad();
			ad::Tape tape;
			ForwardOptions fo;
			fo.train = true;
			fo.rng = &dropout_rng;
			ForwardResult out = model.forward(tape, built.episode, fo);
			std::vector<ad::Var> preds;
			for (const auto& s : out.steps) preds.push_back(s.prediction);
			ad::Var loss = smape_loss(tape, preds, built.truth);
			const double loss_value = loss.value().item();
			if (!std::isfinite(loss_value)) {
				throw NumericError("training diverged at step " + std::to_string(step) + ": loss " +
				                   std::to_string(loss_value));
			}
			tape.backward(loss);
			const double norm = ad::clip_global_norm(model.parameters(), optim.clip_norm);
			const double lr = lr_at(optim, step);
			adam.step(model.parameters(), lr);
			if (options.log_every && (step % options.log_every == 0 || step == 1)) {
				const double ms =
				    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start).count();
				TrainLogEntry entry{step, lr, loss_value, norm, ms};
				result.log.push_back(entry);
				if (options.on_step) options.on_step(entry);
			}
		}
		EvalOptions eval;
		eval.setting = Setting::imputation;
		eval.horizon_start = options.split.val_start;
		eval.nodes = val_nodes;
		eval.batch_size = optim.batch_size;
		const double val = evaluate(model, data, eval).report.smape;
		result.val_smape.push_back(val);
		if (options.checkpoint_dir) {
			save_checkpoint(*options.checkpoint_dir / ("epoch_" + std::to_string(epoch + 1) + ".ckpt"), model);
		}
		if (val < best) {
			best = val;
			result.best_epoch = epoch + 1;
			result.model = model;
		}
	}
	if (options.checkpoint_dir) save_checkpoint(*options.checkpoint_dir / "best.ckpt", result.model);
	return result;
}

} // namespace radflow
