#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "radflow/random.hpp"
#include "radflow/tensor.hpp"

namespace radflow::ad {

struct Parameter {
	std::string name;
	Tensor value;
	Tensor grad;
};

// Owns named parameters with stable addresses, in registration order.
class ParameterSet {
public:
	ParameterSet() = default;
	ParameterSet(const ParameterSet& other);
	ParameterSet& operator=(const ParameterSet& other);
	ParameterSet(ParameterSet&&) noexcept = default;
	ParameterSet& operator=(ParameterSet&&) noexcept = default;

	Parameter& add(std::string name, Tensor value);
	Parameter& at(const std::string& name);
	const Parameter& at(const std::string& name) const;
	Parameter* find(const std::string& name);
	const Parameter* find(const std::string& name) const;
	bool contains(const std::string& name) const { return find(name) != nullptr; }

	std::size_t size() const { return params_.size(); }
	std::size_t scalar_count() const;
	Parameter& operator[](std::size_t i) { return *params_[i]; }
	const Parameter& operator[](std::size_t i) const { return *params_[i]; }

	void zero_grad();
	double grad_norm() const;

private:
	std::vector<std::unique_ptr<Parameter>> params_;
	std::unordered_map<std::string, std::size_t> index_;
};

class Tape;

// Handle to a value recorded on a Tape.
class Var {
public:
	Var() = default;
	const Tensor& value() const;
	Tape* tape() const { return tape_; }
	int id() const { return id_; }
	bool valid() const { return tape_ != nullptr; }
	std::size_t rows() const { return value().rows(); }
	std::size_t cols() const { return value().cols(); }

private:
	friend class Tape;
	Var(Tape* tape, int id) : tape_(tape), id_(id) {}
	Tape* tape_ = nullptr;
	int id_ = -1;
};

// Dynamic reverse-mode tape. Rebuilt for every forward pass; single threaded.
// Parameters are read as snapshots when first used on a tape, and backward()
// accumulates into Parameter::grad.
class Tape {
public:
	using BackwardFn = std::function<void(Tape&)>;

	explicit Tape(bool record = true) : record_(record) {}
	Tape(const Tape&) = delete;
	Tape& operator=(const Tape&) = delete;

	bool recording() const { return record_; }
	std::size_t node_count() const { return nodes_.size(); }

	Var constant(Tensor value);
	Var param(Parameter& parameter);

	const Tensor& value(int id) const { return nodes_[id].value; }
	// Gradient buffer for a node; zero-initialised on first access.
	Tensor& grad(int id);
	const Tensor* grad_if_any(int id) const;

	void backward(Var loss);

	// Used by op implementations. The closure runs during backward and may
	// read the node's gradient via grad(self).
	Var push(Tensor value, const char* op, BackwardFn backward);
	int last_id() const { return static_cast<int>(nodes_.size()) - 1; }

private:
	struct Node {
		Tensor value;
		Tensor grad;
		BackwardFn backward;
		Parameter* parameter = nullptr;
	};
	std::vector<Node> nodes_;
	std::unordered_map<Parameter*, int> param_nodes_;
	bool record_;
	bool consumed_ = false;
};

// ---- primitive ops ---------------------------------------------------------

// y = x W^T (+ b). x: [n, in] or [in]; W: [out, in]; b: [out].
Var linear(Var x, Var weight, std::optional<Var> bias = std::nullopt);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, Real factor);
Var add_scalar(Var a, Real value);
Var sigmoid(Var x);
Var tanh(Var x);
// Exact x * Phi(x) with Phi the standard normal CDF.
Var gelu(Var x);
Var relu(Var x);
Var expm1(Var x);
Var abs(Var x);
Var sum(Var x);
Var mean(Var x);
// Broadcast a [rows] column of weights over columns: y[r, c] = x[r, c] * w[r].
Var mul_rows(Var x, const std::vector<Real>& row_weights);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var softmax(Var scores);
Var dropout(Var x, double p, bool train, Rng& rng);

// Fused LSTM cell with gate order (input, forget, cell, output).
// z, h, c: [n, H]; w_ih, w_hh: [4H, H]; bias: [4H]. Returns [n, 2H] = [h' | c'].
Var lstm_cell(Var z, Var h, Var c, Var w_ih, Var w_hh, Var bias);

struct AttentionResult {
	Var output;     // [n, H], weighted sum of values before any activation
	Tensor weights; // [n, heads, slots + 1]; last entry is the null slot
};

// Multi-head dot-product attention of one query row per group over `slots`
// keys per group. query: [n, H]; keys/values: [n * slots, H];
// present: n * slots flags. Scores are scaled by 1/sqrt(H / heads).
// With use_null the learnable null key/value ([H] each) join every softmax.
// A group with no present slot and no null slot yields a zero output row.
AttentionResult multihead_attention(Var query, Var keys, Var values, std::optional<Var> null_key,
                                    std::optional<Var> null_value, const std::vector<std::uint8_t>& present,
                                    std::size_t slots, std::size_t heads);

// Mean over the present rows of each group. x: [n * slots, E] -> [n, E].
// Groups with no present rows give zero.
Var masked_group_mean(Var x, const std::vector<std::uint8_t>& present, std::size_t slots);

// Global L2 norm across every parameter gradient, rescaled to at most
// `threshold`. Returns the norm before clipping.
double clip_global_norm(ParameterSet& params, double threshold);

double normal_cdf(double x);

} // namespace radflow::ad
