#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace radflow {

#ifdef RADFLOW_USE_FLOAT32
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major tensor. Every op in this project sees a tensor as a matrix:
// rank 0 and rank 1 tensors are a single row, rank 2 is [rows, cols].
class Tensor {
public:
	Tensor() = default;
	explicit Tensor(Shape shape, Real fill = 0);
	Tensor(Shape shape, std::vector<Real> data);

	static Tensor scalar(Real value);
	static Tensor vector(std::initializer_list<Real> values);
	static Tensor vector(std::vector<Real> values);
	static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<Real> values);
	static Tensor zeros_like(const Tensor& other);

	const Shape& shape() const { return shape_; }
	std::size_t rank() const { return shape_.size(); }
	std::size_t size() const { return data_.size(); }
	bool empty() const { return data_.empty(); }

	std::size_t rows() const { return shape_.size() < 2 ? 1 : shape_[0]; }
	std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }

	Real* data() { return data_.data(); }
	const Real* data() const { return data_.data(); }
	std::span<Real> values() { return data_; }
	std::span<const Real> values() const { return data_; }
	std::vector<Real>& storage() { return data_; }
	const std::vector<Real>& storage() const { return data_; }

	Real& operator[](std::size_t i) { return data_[i]; }
	Real operator[](std::size_t i) const { return data_[i]; }
	Real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
	Real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

	std::span<Real> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
	std::span<const Real> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

	Real item() const;
	bool all_finite() const;
	void fill(Real value);
	Tensor reshaped(Shape shape) const;

	bool operator==(const Tensor& other) const = default;

private:
	Shape shape_;
	std::vector<Real> data_;
};

std::size_t shape_product(const Shape& shape);

} // namespace radflow
