#pragma once

// Central finite-difference oracle. Independent of the reverse pass: it only
// evaluates the loss on non-recording tapes with perturbed parameter values.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "radflow/autodiff.hpp"

namespace radflow::testing {

struct GradCheckResult {
	double max_rel_error = 0;
	std::string worst;
	std::size_t checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries whose
// true gradient is ~0 from dividing roundoff by roundoff.
inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
	return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

using LossFn = std::function<ad::Var(ad::Tape&)>;

inline GradCheckResult check_gradients(ad::ParameterSet& params, const LossFn& loss_fn, double h = 1e-5,
                                       double floor = 1e-5) {
	params.zero_grad();
	{
		ad::Tape tape;
		tape.backward(loss_fn(tape));
	}
	GradCheckResult result;
	auto eval = [&] {
		ad::Tape tape(false);
		return static_cast<double>(loss_fn(tape).value().item());
	};
	for (std::size_t i = 0; i < params.size(); ++i) {
		ad::Parameter& p = params[i];
		for (std::size_t k = 0; k < p.value.size(); ++k) {
			const Real saved = p.value[k];
			p.value[k] = saved + h;
			const double up = eval();
			p.value[k] = saved - h;
			const double down = eval();
			p.value[k] = saved;
			const double numeric = (up - down) / (2 * h);
			const double err = relative_error(p.grad[k], numeric, floor);
			++result.checked;
			if (err > result.max_rel_error) {
				result.max_rel_error = err;
				result.worst = p.name + "[" + std::to_string(k) + "] analytic=" + std::to_string(p.grad[k]) +
				               " numeric=" + std::to_string(numeric);
			}
		}
	}
	return result;
}

} // namespace radflow::testing
