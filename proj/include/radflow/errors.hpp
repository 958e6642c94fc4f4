#pragma once

#include <stdexcept>
#include <string>

namespace radflow {

// Invalid configuration or arguments. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
	using std::invalid_argument::invalid_argument;
};

// Missing, malformed or inconsistent data. The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

class FormatError : public DataError {
public:
	using DataError::DataError;
};

class ShapeError : public std::invalid_argument {
public:
	using std::invalid_argument::invalid_argument;
};

// A forward op produced NaN/Inf, or training diverged.
class NumericError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

} // namespace radflow
