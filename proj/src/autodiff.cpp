#include "radflow/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "radflow/errors.hpp"

namespace radflow::ad {

namespace {

using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

ConstMatMap as_matrix(const Tensor& t) {
	return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

MatMap as_matrix(Tensor& t) {
	return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

void require_same_tape(Var a, Var b) {
	if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
		throw std::invalid_argument("operands must be recorded on the same tape");
	}
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
	if (a.shape() != b.shape()) {
		throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
		                 shape_string(b.shape()));
	}
}

// Elementwise unary op given value function and derivative in terms of (x, y).
template <class F, class DF>
Var unary(Var x, const char* name, F f, DF df) {
	Tape& tape = *x.tape();
	const Tensor& in = x.value();
	Tensor out(in.shape());
	for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
	if (!tape.recording()) return tape.push(std::move(out), name, {});
	const int xi = x.id();
	const int self = tape.last_id() + 1;
	return tape.push(std::move(out), name, [xi, self, df](Tape& t) {
		const Tensor& g = t.grad(self);
		const Tensor& xv = t.value(xi);
		const Tensor& yv = t.value(self);
		Tensor& gx = t.grad(xi);
		for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
	});
}

} // namespace

double normal_cdf(double x) {
	return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// ---- ParameterSet ----------------------------------------------------------

ParameterSet::ParameterSet(const ParameterSet& other) {
	*this = other;
}

ParameterSet& ParameterSet::operator=(const ParameterSet& other) {
	if (this == &other) return *this;
	params_.clear();
	index_.clear();
	for (const auto& p : other.params_) add(p->name, p->value).grad = p->grad;
	return *this;
}

Parameter& ParameterSet::add(std::string name, Tensor value) {
	if (index_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
	index_.emplace(name, params_.size());
	auto p = std::make_unique<Parameter>();
	p->name = std::move(name);
	p->grad = Tensor::zeros_like(value);
	p->value = std::move(value);
	params_.push_back(std::move(p));
	return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
	auto it = index_.find(name);
	return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParameterSet::find(const std::string& name) const {
	auto it = index_.find(name);
	return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter& ParameterSet::at(const std::string& name) {
	if (auto* p = find(name)) return *p;
	throw std::out_of_range("no parameter named " + name);
}

const Parameter& ParameterSet::at(const std::string& name) const {
	if (const auto* p = find(name)) return *p;
	throw std::out_of_range("no parameter named " + name);
}

std::size_t ParameterSet::scalar_count() const {
	std::size_t n = 0;
	for (const auto& p : params_) n += p->value.size();
	return n;
}

void ParameterSet::zero_grad() {
	for (auto& p : params_) {
		if (p->grad.shape() != p->value.shape()) p->grad = Tensor::zeros_like(p->value);
		else p->grad.fill(0);
	}
}

double ParameterSet::grad_norm() const {
	double sq = 0;
	for (const auto& p : params_)
		for (Real g : p->grad.values()) sq += static_cast<double>(g) * g;
	return std::sqrt(sq);
}

double clip_global_norm(ParameterSet& params, double threshold) {
	if (!(threshold > 0)) throw std::invalid_argument("clip threshold must be positive");
	const double norm = params.grad_norm();
	if (norm > threshold) {
		const Real factor = static_cast<Real>(threshold / norm);
		for (std::size_t i = 0; i < params.size(); ++i)
			for (Real& g : params[i].grad.values()) g *= factor;
	}
	return norm;
}

// ---- Tape ------------------------------------------------------------------

const Tensor& Var::value() const {
	if (!tape_) throw std::logic_error("value() on an empty Var");
	return tape_->value(id_);
}

Var Tape::push(Tensor value, const char* op, BackwardFn backward) {
	if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
	nodes_.push_back(Node{std::move(value), Tensor{}, record_ ? std::move(backward) : BackwardFn{}, nullptr});
	return Var(this, last_id());
}

Var Tape::constant(Tensor value) {
	return push(std::move(value), "constant", {});
}

Var Tape::param(Parameter& parameter) {
	if (auto it = param_nodes_.find(&parameter); it != param_nodes_.end()) return Var(this, it->second);
	Var v = push(parameter.value, parameter.name.c_str(), {});
	nodes_.back().parameter = &parameter;
	param_nodes_.emplace(&parameter, v.id());
	return v;
}

Tensor& Tape::grad(int id) {
	Node& n = nodes_[id];
	if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Tensor::zeros_like(n.value);
	return n.grad;
}

const Tensor* Tape::grad_if_any(int id) const {
	const Node& n = nodes_[id];
	return n.grad.shape() == n.value.shape() && n.grad.size() == n.value.size() ? &n.grad : nullptr;
}

void Tape::backward(Var loss) {
	if (loss.tape() != this || loss.id() < 0 || loss.id() >= static_cast<int>(nodes_.size())) {
		throw std::invalid_argument("loss is not recorded on this tape");
	}
	if (!record_) throw std::logic_error("backward() on a tape that does not record");
	if (loss.value().size() != 1) throw ShapeError("backward() needs a scalar loss, got " + shape_string(loss.value().shape()));
	if (consumed_) throw std::logic_error("backward() may run once per forward pass");
	consumed_ = true;
	grad(loss.id()).fill(1);
	for (int i = loss.id(); i >= 0; --i) {
		Node& n = nodes_[i];
		if (n.grad.empty() && n.value.size() != 0) continue;
		if (n.backward) n.backward(*this);
	}
	for (auto& [param, id] : param_nodes_) {
		const Tensor* g = grad_if_any(id);
		if (!g) continue;
		if (param->grad.shape() != param->value.shape()) param->grad = Tensor::zeros_like(param->value);
		for (std::size_t k = 0; k < g->size(); ++k) param->grad[k] += (*g)[k];
	}
}

// ---- ops -------------------------------------------------------------------

Var linear(Var x, Var weight, std::optional<Var> bias) {
	require_same_tape(x, weight);
	Tape& tape = *x.tape();
	const Tensor& xv = x.value();
	const Tensor& wv = weight.value();
	if (wv.rank() != 2 || xv.cols() != wv.cols()) {
		throw ShapeError("linear: input " + shape_string(xv.shape()) + " vs weight " + shape_string(wv.shape()));
	}
	const std::size_t n = xv.rows(), out_dim = wv.rows();
	Tensor out(xv.rank() <= 1 ? Shape{out_dim} : Shape{n, out_dim});
	as_matrix(out).noalias() = as_matrix(xv) * as_matrix(wv).transpose();
	if (bias) {
		require_same_tape(x, *bias);
		const Tensor& bv = bias->value();
		if (bv.size() != out_dim) throw ShapeError("linear: bias size " + std::to_string(bv.size()));
		for (std::size_t r = 0; r < n; ++r)
			for (std::size_t c = 0; c < out_dim; ++c) out.at(r, c) += bv[c];
	}
	if (!tape.recording()) return tape.push(std::move(out), "linear", {});
	const int xi = x.id(), wi = weight.id(), bi = bias ? bias->id() : -1;
	const int self = tape.last_id() + 1;
	return tape.push(std::move(out), "linear", [xi, wi, bi, self](Tape& t) {
		const Tensor& g = t.grad(self);
		auto gm = as_matrix(g);
		as_matrix(t.grad(xi)).noalias() += gm * as_matrix(t.value(wi));
		as_matrix(t.grad(wi)).noalias() += gm.transpose() * as_matrix(t.value(xi));
		if (bi >= 0) {
			Tensor& gb = t.grad(bi);
			for (std::size_t r = 0; r < g.rows(); ++r)
				for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g.at(r, c);
		}
	});
}

namespace {

template <class F, class DA, class DB>
Var binary(Var a, Var b, const char* name, F f, DA da, DB db) {
	require_same_tape(a, b);
	Tape& tape = *a.tape();
	const Tensor& av = a.value();
	const Tensor& bv = b.value();
	require_same_shape(av, bv, name);
	Tensor out(av.shape());
	for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
	if (!tape.recording()) return tape.push(std::move(out), name, {});
	const int ai = a.id(), bi = b.id();
	const int self = tape.last_id() + 1;
	return tape.push(std::move(out), name, [ai, bi, self, da, db](Tape& t) {
		const Tensor& g = t.grad(self);
		const Tensor& x = t.value(ai);
		const Tensor& y = t.value(bi);
		{
			Tensor& ga = t.grad(ai);
			for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * da(x[i], y[i]);
		}
		Tensor& gb = t.grad(bi);
		for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * db(x[i], y[i]);
	});
}

} // namespace

Var add(Var a, Var b) {
	return binary(
	    a, b, "add", [](Real x, Real y) { return x + y; }, [](Real, Real) { return Real{1}; },
	    [](Real, Real) { return Real{1}; });
}

Var sub(Var a, Var b) {
	return binary(
	    a, b, "sub", [](Real x, Real y) { return x - y; }, [](Real, Real) { return Real{1}; },
	    [](Real, Real) { return Real{-1}; });
}

Var mul(Var a, Var b) {
	return binary(
	    a, b, "mul", [](Real x, Real y) { return x * y; }, [](Real, Real y) { return y; },
	    [](Real x, Real) { return x; });
}

Var div(Var a, Var b) {
	return binary(
	    a, b, "div", [](Real x, Real y) { return x / y; }, [](Real, Real y) { return 1 / y; },
	    [](Real x, Real y) { return -x / (y * y); });
}

Var scale(Var a, Real factor) {
	return unary(
	    a, "scale", [factor](Real x) { return factor * x; }, [factor](Real, Real) { return factor; });
}

Var add_scalar(Var a, Real value) {
	return unary(
	    a, "add_scalar", [value](Real x) { return x + value; }, [](Real, Real) { return Real{1}; });
}

Var sigmoid(Var x) {
	return unary(
	    x, "sigmoid", [](Real v) { return 1 / (1 + std::exp(-v)); }, [](Real, Real y) { return y * (1 - y); });
}

Var tanh(Var x) {
	return unary(
	    x, "tanh", [](Real v) { return std::tanh(v); }, [](Real, Real y) { return 1 - y * y; });
}

Var gelu(Var x) {
	return unary(
	    x, "gelu", [](Real v) { return static_cast<Real>(v * normal_cdf(v)); },
	    [](Real v, Real) {
		    const double pdf = std::exp(-0.5 * double(v) * v) / std::sqrt(2 * std::numbers::pi);
		    return static_cast<Real>(normal_cdf(v) + v * pdf);
	    });
}

Var relu(Var x) {
	return unary(
	    x, "relu", [](Real v) { return v > 0 ? v : Real{0}; }, [](Real v, Real) { return v > 0 ? Real{1} : Real{0}; });
}

Var expm1(Var x) {
	return unary(
	    x, "expm1", [](Real v) { return std::expm1(v); }, [](Real, Real y) { return y + 1; });
}

Var abs(Var x) {
	return unary(
	    x, "abs", [](Real v) { return std::abs(v); },
	    [](Real v, Real) { return v > 0 ? Real{1} : (v < 0 ? Real{-1} : Real{0}); });
}

Var sum(Var x) {
	Tape& tape = *x.tape();
	const Tensor& xv = x.value();
	double s = 0;
	for (Real v : xv.values()) s += v;
	if (!tape.recording()) return tape.push(Tensor::scalar(static_cast<Real>(s)), "sum", {});
	const int xi = x.id(), self = tape.last_id() + 1;
	return tape.push(Tensor::scalar(static_cast<Real>(s)), "sum", [xi, self](Tape& t) {
		const Real g = t.grad(self)[0];
		for (Real& v : t.grad(xi).values()) v += g;
	});
}

Var mean(Var x) {
	const auto n = x.value().size();
	if (n == 0) throw ShapeError("mean of empty tensor");
	return scale(sum(x), Real{1} / static_cast<Real>(n));
}

Var mul_rows(Var x, const std::vector<Real>& row_weights) {
	Tape& tape = *x.tape();
	const Tensor& xv = x.value();
	if (row_weights.size() != xv.rows()) throw ShapeError("mul_rows: weight count != rows");
	Tensor out = xv;
	for (std::size_t r = 0; r < xv.rows(); ++r)
		for (Real& v : out.row(r)) v *= row_weights[r];
	if (!tape.recording()) return tape.push(std::move(out), "mul_rows", {});
	const int xi = x.id(), self = tape.last_id() + 1;
	return tape.push(std::move(out), "mul_rows", [xi, self, row_weights](Tape& t) {
		const Tensor& g = t.grad(self);
		Tensor& gx = t.grad(xi);
		for (std::size_t r = 0; r < g.rows(); ++r)
			for (std::size_t c = 0; c < g.cols(); ++c) gx.at(r, c) += g.at(r, c) * row_weights[r];
	});
}

Var concat_cols(const std::vector<Var>& parts) {
	if (parts.empty()) throw ShapeError("concat_cols of nothing");
	Tape& tape = *parts.front().tape();
	const std::size_t n = parts.front().value().rows();
	std::size_t total = 0;
	std::vector<int> ids;
	std::vector<std::size_t> widths;
	for (const Var& p : parts) {
		require_same_tape(parts.front(), p);
		if (p.value().rows() != n) throw ShapeError("concat_cols: row mismatch");
		ids.push_back(p.id());
		widths.push_back(p.value().cols());
		total += p.value().cols();
	}
	const bool vec = parts.front().value().rank() <= 1;
	Tensor out(vec ? Shape{total} : Shape{n, total});
	std::size_t offset = 0;
	for (std::size_t k = 0; k < parts.size(); ++k) {
		const Tensor& pv = parts[k].value();
		for (std::size_t r = 0; r < n; ++r)
			std::copy(pv.row(r).begin(), pv.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
		offset += widths[k];
	}
	if (!tape.recording()) return tape.push(std::move(out), "concat_cols", {});
	const int self = tape.last_id() + 1;
	return tape.push(std::move(out), "concat_cols", [ids, widths, self](Tape& t) {
		const Tensor& g = t.grad(self);
		std::size_t off = 0;
		for (std::size_t k = 0; k < ids.size(); ++k) {
			Tensor& gp = t.grad(ids[k]);
			for (std::size_t r = 0; r < g.rows(); ++r)
				for (std::size_t c = 0; c < widths[k]; ++c) gp.at(r, c) += g.at(r, off + c);
			off += widths[k];
		}
	});
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
	Tape& tape = *x.tape();
	const Tensor& xv = x.value();
	if (begin + count > xv.cols()) throw ShapeError("slice_cols out of range");
	const std::size_t n = xv.rows();
	Tensor out(xv.rank() <= 1 ? Shape{count} : Shape{n, count});
	for (std::size_t r = 0; r < n; ++r)
		for (std::size_t c = 0; c < count; ++c) out.at(r, c) = xv.at(r, begin + c);
	if (!tape.recording()) return tape.push(std::move(out), "slice_cols", {});
	const int xi = x.id(), self = tape.last_id() + 1;
	return tape.push(std::move(out), "slice_cols", [xi, self, begin](Tape& t) {
		const Tensor& g = t.grad(self);
		Tensor& gx = t.grad(xi);
		for (std::size_t r = 0; r < g.rows(); ++r)
			for (std::size_t c = 0; c < g.cols(); ++c) gx.at(r, begin + c) += g.at(r, c);
	});
}

Var softmax(Var scores) {
	Tape& tape = *scores.tape();
	const Tensor& sv = scores.value();
	if (sv.size() == 0) throw ShapeError("softmax needs at least one score");
	Tensor out(sv.shape());
	for (std::size_t r = 0; r < sv.rows(); ++r) {
		auto in = sv.row(r);
		auto o = out.row(r);
		const Real mx = *std::max_element(in.begin(), in.end());
		Real total = 0;
		for (std::size_t c = 0; c < in.size(); ++c) total += (o[c] = std::exp(in[c] - mx));
		for (Real& v : o) v /= total;
	}
	if (!tape.recording()) return tape.push(std::move(out), "softmax", {});
	const int xi = scores.id(), self = tape.last_id() + 1;
	return tape.push(std::move(out), "softmax", [xi, self](Tape& t) {
		const Tensor& g = t.grad(self);
		const Tensor& y = t.value(self);
		Tensor& gx = t.grad(xi);
		for (std::size_t r = 0; r < g.rows(); ++r) {
			Real dot = 0;
			for (std::size_t c = 0; c < g.cols(); ++c) dot += g.at(r, c) * y.at(r, c);
			for (std::size_t c = 0; c < g.cols(); ++c) gx.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
		}
	});
}

Var dropout(Var x, double p, bool train, Rng& rng) {
	if (!(p >= 0 && p < 1)) throw std::invalid_argument("dropout probability must lie in [0, 1)");
	if (!train || p == 0) return x;
	Tape& tape = *x.tape();
	const Tensor& xv = x.value();
	std::vector<Real> keep(xv.size());
	const Real survivor = static_cast<Real>(1 / (1 - p));
	for (Real& k : keep) k = uniform01(rng) < p ? Real{0} : survivor;
	Tensor out(xv.shape());
	for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * keep[i];
	if (!tape.recording()) return tape.push(std::move(out), "dropout", {});
	const int xi = x.id(), self = tape.last_id() + 1;
	return tape.push(std::move(out), "dropout", [xi, self, keep = std::move(keep)](Tape& t) {
		const Tensor& g = t.grad(self);
		Tensor& gx = t.grad(xi);
		for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * keep[i];
	});
}

Var lstm_cell(Var z, Var h, Var c, Var w_ih, Var w_hh, Var bias) {
	require_same_tape(z, h);
	require_same_tape(z, c);
	require_same_tape(z, w_ih);
	require_same_tape(z, w_hh);
	require_same_tape(z, bias);
	Tape& tape = *z.tape();
	const Tensor& zv = z.value();
	const Tensor& hv = h.value();
	const Tensor& cv = c.value();
	const std::size_t n = zv.rows(), H = hv.cols();
	if (w_ih.value().rows() != 4 * H || w_hh.value().rows() != 4 * H || w_hh.value().cols() != H ||
	    w_ih.value().cols() != zv.cols() || bias.value().size() != 4 * H || hv.rows() != n || cv.rows() != n ||
	    cv.cols() != H) {
		throw ShapeError("lstm_cell: inconsistent shapes");
	}
	Tensor gates(Shape{n, 4 * H});
	auto gm = as_matrix(gates);
	gm.noalias() = as_matrix(zv) * as_matrix(w_ih.value()).transpose();
	gm.noalias() += as_matrix(hv) * as_matrix(w_hh.value()).transpose();
	const Tensor& bv = bias.value();
	// activated gates stored in place: i, f, g, o
	for (std::size_t r = 0; r < n; ++r) {
		auto row = gates.row(r);
		for (std::size_t k = 0; k < 4 * H; ++k) {
			const Real a = row[k] + bv[k];
			row[k] = (k >= 2 * H && k < 3 * H) ? std::tanh(a) : 1 / (1 + std::exp(-a));
		}
	}
	Tensor out(Shape{n, 2 * H});
	Tensor tanh_c(Shape{n, H});
	for (std::size_t r = 0; r < n; ++r) {
		auto gr = gates.row(r);
		for (std::size_t k = 0; k < H; ++k) {
			const Real cn = gr[H + k] * cv.at(r, k) + gr[k] * gr[2 * H + k];
			const Real tc = std::tanh(cn);
			tanh_c.at(r, k) = tc;
			out.at(r, k) = gr[3 * H + k] * tc;
			out.at(r, H + k) = cn;
		}
	}
	if (!tape.recording()) return tape.push(std::move(out), "lstm_cell", {});
	const int zi = z.id(), hi = h.id(), ci = c.id(), wii = w_ih.id(), whi = w_hh.id(), bi = bias.id();
	const int self = tape.last_id() + 1;
	return tape.push(std::move(out), "lstm_cell",
	                 [=, gates = std::move(gates), tanh_c = std::move(tanh_c)](Tape& t) {
		                 const Tensor& g = t.grad(self);
		                 const Tensor& cprev = t.value(ci);
		                 Tensor dgates(Shape{n, 4 * H});
		                 Tensor dc_prev(Shape{n, H});
		                 for (std::size_t r = 0; r < n; ++r) {
			                 auto gr = gates.row(r);
			                 for (std::size_t k = 0; k < H; ++k) {
				                 const Real ig = gr[k], fg = gr[H + k], cg = gr[2 * H + k], og = gr[3 * H + k];
				                 const Real tc = tanh_c.at(r, k);
				                 const Real dh = g.at(r, k);
				                 const Real dc = g.at(r, H + k) + dh * og * (1 - tc * tc);
				                 dgates.at(r, k) = dc * cg * ig * (1 - ig);
				                 dgates.at(r, H + k) = dc * cprev.at(r, k) * fg * (1 - fg);
				                 dgates.at(r, 2 * H + k) = dc * ig * (1 - cg * cg);
				                 dgates.at(r, 3 * H + k) = dh * tc * og * (1 - og);
				                 dc_prev.at(r, k) = dc * fg;
			                 }
		                 }
		                 auto dg = as_matrix(static_cast<const Tensor&>(dgates));
		                 as_matrix(t.grad(zi)).noalias() += dg * as_matrix(t.value(wii));
		                 as_matrix(t.grad(hi)).noalias() += dg * as_matrix(t.value(whi));
		                 as_matrix(t.grad(wii)).noalias() += dg.transpose() * as_matrix(t.value(zi));
		                 as_matrix(t.grad(whi)).noalias() += dg.transpose() * as_matrix(t.value(hi));
		                 Tensor& gb = t.grad(bi);
		                 for (std::size_t r = 0; r < n; ++r)
			                 for (std::size_t k = 0; k < 4 * H; ++k) gb[k] += dgates.at(r, k);
		                 Tensor& gc = t.grad(ci);
		                 for (std::size_t i = 0; i < dc_prev.size(); ++i) gc[i] += dc_prev[i];
	                 });
}

AttentionResult multihead_attention(Var query, Var keys, Var values, std::optional<Var> null_key,
                                    std::optional<Var> null_value, const std::vector<std::uint8_t>& present,
                                    std::size_t slots, std::size_t heads) {
	require_same_tape(query, keys);
	require_same_tape(query, values);
	if (null_key.has_value() != null_value.has_value()) {
		throw std::invalid_argument("null key and null value must be given together");
	}
	const bool use_null = null_key.has_value();
	Tape& tape = *query.tape();
	const Tensor& qv = query.value();
	const std::size_t n = qv.rows(), H = qv.cols();
	if (heads == 0 || H % heads != 0) throw ShapeError("attention: hidden size not divisible by heads");
	const Tensor& kv = keys.value();
	const Tensor& vv = values.value();
	if (slots > 0 && (kv.rows() != n * slots || vv.rows() != n * slots || kv.cols() != H || vv.cols() != H)) {
		throw ShapeError("attention: keys/values must be [n * slots, H]");
	}
	if (present.size() != n * slots) throw ShapeError("attention: presence mask size mismatch");
	const std::size_t dh = H / heads;
	const Real inv_sqrt = static_cast<Real>(1 / std::sqrt(static_cast<double>(dh)));
	const Tensor* nk = use_null ? &null_key->value() : nullptr;
	const Tensor* nv = use_null ? &null_value->value() : nullptr;
	if (use_null && (nk->size() != H || nv->size() != H)) throw ShapeError("attention: null slot must have H entries");

	Tensor weights(Shape{n, heads, slots + 1}, Real{0});
	Tensor out(Shape{n, H}, Real{0});
	std::vector<Real> scores(slots + 1);
	for (std::size_t b = 0; b < n; ++b) {
		for (std::size_t hd = 0; hd < heads; ++hd) {
			const std::size_t off = hd * dh;
			Real mx = -std::numeric_limits<Real>::infinity();
			bool any = false;
			for (std::size_t s = 0; s <= slots; ++s) {
				const bool valid = s < slots ? present[b * slots + s] != 0 : use_null;
				if (!valid) continue;
				Real dot = 0;
				for (std::size_t k = 0; k < dh; ++k)
					dot += qv.at(b, off + k) * (s < slots ? kv.at(b * slots + s, off + k) : (*nk)[off + k]);
				scores[s] = dot * inv_sqrt;
				mx = std::max(mx, scores[s]);
				any = true;
			}
			if (!any) continue;
			Real total = 0;
			Real* w = &weights[(b * heads + hd) * (slots + 1)];
			for (std::size_t s = 0; s <= slots; ++s) {
				const bool valid = s < slots ? present[b * slots + s] != 0 : use_null;
				if (valid) total += (w[s] = std::exp(scores[s] - mx));
			}
			for (std::size_t s = 0; s <= slots; ++s) w[s] /= total;
			for (std::size_t s = 0; s <= slots; ++s) {
				if (w[s] == 0) continue;
				for (std::size_t k = 0; k < dh; ++k)
					out.at(b, off + k) += w[s] * (s < slots ? vv.at(b * slots + s, off + k) : (*nv)[off + k]);
			}
		}
	}
	Tensor weights_copy = weights;
	if (!tape.recording()) return {tape.push(std::move(out), "attention", {}), std::move(weights_copy)};
	const int qi = query.id(), ki = keys.id(), vi = values.id();
	const int nki = use_null ? null_key->id() : -1, nvi = use_null ? null_value->id() : -1;
	const int self = tape.last_id() + 1;
	Var result = tape.push(std::move(out), "attention", [=, weights = std::move(weights)](Tape& t) {
		const Tensor& g = t.grad(self);
		const Tensor& q = t.value(qi);
		const Tensor& kk = t.value(ki);
		const Tensor& vals = t.value(vi);
		const Tensor* nkv = nki >= 0 ? &t.value(nki) : nullptr;
		const Tensor* nvv = nvi >= 0 ? &t.value(nvi) : nullptr;
		Tensor& gq = t.grad(qi);
		Tensor* gk = slots > 0 ? &t.grad(ki) : nullptr;
		Tensor* gv = slots > 0 ? &t.grad(vi) : nullptr;
		Tensor* gnk = nki >= 0 ? &t.grad(nki) : nullptr;
		Tensor* gnv = nvi >= 0 ? &t.grad(nvi) : nullptr;
		std::vector<Real> dw(slots + 1);
		for (std::size_t b = 0; b < n; ++b) {
			for (std::size_t hd = 0; hd < heads; ++hd) {
				const std::size_t off = hd * dh;
				const Real* w = weights.data() + (b * heads + hd) * (slots + 1);
				Real weighted = 0;
				for (std::size_t s = 0; s <= slots; ++s) {
					dw[s] = 0;
					if (w[s] == 0) continue;
					for (std::size_t k = 0; k < dh; ++k)
						dw[s] += g.at(b, off + k) * (s < slots ? vals.at(b * slots + s, off + k) : (*nvv)[off + k]);
					weighted += w[s] * dw[s];
				}
				for (std::size_t s = 0; s <= slots; ++s) {
					if (w[s] == 0) continue;
					const Real dscore = w[s] * (dw[s] - weighted) * inv_sqrt;
					for (std::size_t k = 0; k < dh; ++k) {
						const Real key = s < slots ? kk.at(b * slots + s, off + k) : (*nkv)[off + k];
						gq.at(b, off + k) += dscore * key;
						if (s < slots) {
							gk->at(b * slots + s, off + k) += dscore * q.at(b, off + k);
							gv->at(b * slots + s, off + k) += w[s] * g.at(b, off + k);
						} else {
							(*gnk)[off + k] += dscore * q.at(b, off + k);
							(*gnv)[off + k] += w[s] * g.at(b, off + k);
						}
					}
				}
			}
		}
	});
	return {result, std::move(weights_copy)};
}

Var masked_group_mean(Var x, const std::vector<std::uint8_t>& present, std::size_t slots) {
	Tape& tape = *x.tape();
	const Tensor& xv = x.value();
	if (slots == 0 || xv.rows() % slots != 0 || present.size() != xv.rows()) {
		throw ShapeError("masked_group_mean: rows must be groups of `slots`");
	}
	const std::size_t n = xv.rows() / slots, E = xv.cols();
	std::vector<Real> inv_count(n, 0);
	Tensor out(Shape{n, E}, Real{0});
	for (std::size_t b = 0; b < n; ++b) {
		std::size_t count = 0;
		for (std::size_t s = 0; s < slots; ++s) count += present[b * slots + s] != 0;
		if (count == 0) continue;
		inv_count[b] = Real{1} / static_cast<Real>(count);
		for (std::size_t s = 0; s < slots; ++s) {
			if (!present[b * slots + s]) continue;
			for (std::size_t e = 0; e < E; ++e) out.at(b, e) += xv.at(b * slots + s, e);
		}
		for (Real& v : out.row(b)) v *= inv_count[b];
	}
	if (!tape.recording()) return tape.push(std::move(out), "group_mean", {});
	const int xi = x.id(), self = tape.last_id() + 1;
	return tape.push(std::move(out), "group_mean", [=](Tape& t) {
		const Tensor& g = t.grad(self);
		Tensor& gx = t.grad(xi);
		for (std::size_t b = 0; b < n; ++b) {
			if (inv_count[b] == 0) continue;
			for (std::size_t s = 0; s < slots; ++s) {
				if (!present[b * slots + s]) continue;
				for (std::size_t e = 0; e < E; ++e) gx.at(b * slots + s, e) += g.at(b, e) * inv_count[b];
			}
		}
	});
}

} // namespace radflow::ad
