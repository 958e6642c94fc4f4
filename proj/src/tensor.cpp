#include "radflow/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "radflow/errors.hpp"

namespace radflow {

std::size_t shape_product(const Shape& shape) {
	return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
	std::ostringstream out;
	out << '[';
	for (std::size_t i = 0; i < shape.size(); ++i) {
		if (i) out << ',';
		out << shape[i];
	}
	out << ']';
	return out.str();
}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
	if (shape_product(shape_) != data_.size()) {
		throw ShapeError("tensor shape " + shape_string(shape_) + " does not match " + std::to_string(data_.size()) +
		                 " values");
	}
}

Tensor Tensor::scalar(Real value) {
	return Tensor(Shape{}, std::vector<Real>{value});
}

Tensor Tensor::vector(std::initializer_list<Real> values) {
	return Tensor(Shape{values.size()}, std::vector<Real>(values));
}

Tensor Tensor::vector(std::vector<Real> values) {
	const auto n = values.size();
	return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<Real> values) {
	return Tensor(Shape{rows, cols}, std::vector<Real>(values));
}

Tensor Tensor::zeros_like(const Tensor& other) {
	return Tensor(other.shape(), Real{0});
}

Real Tensor::item() const {
	if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
	return data_[0];
}

bool Tensor::all_finite() const {
	return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

void Tensor::fill(Real value) {
	std::fill(data_.begin(), data_.end(), value);
}

Tensor Tensor::reshaped(Shape shape) const {
	return Tensor(std::move(shape), data_);
}

} // namespace radflow
