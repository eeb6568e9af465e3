#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "forge/numcore/autodiff.hpp"

namespace forge::num {

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Builds a scalar on `tape` from the given parameter Vars (same order as the
// NamedTensor list handed to grad_check).
using ScalarFunction = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct ParamGradError {
  std::string name;
  double rel_error = 0.0;  // ||analytic - numeric|| / (||numeric|| + 1e-12)
  double abs_error = 0.0;  // max |analytic - numeric|
  Tensor analytic;
  Tensor numeric;
};

struct GradCheckReport {
  std::vector<ParamGradError> params;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

// Compares tape gradients with central differences f(x+eps) - f(x-eps) / 2eps.
// Throws NumericError naming the parameter if any evaluation is not finite.
GradCheckReport grad_check(const ScalarFunction& f, std::span<const NamedTensor> params, double eps = 1e-5);

}  // namespace forge::num
