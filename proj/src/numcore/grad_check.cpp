#include "forge/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "forge/error.hpp"

namespace forge::num {

namespace {

double evaluate(const ScalarFunction& f, std::span<const NamedTensor> params, std::size_t which,
                const Tensor& replacement) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    vars.push_back(tape.constant(i == which ? replacement : params[i].value));
  }
  Var out = f(tape, vars);
  if (out.value().size() != 1) throw DimensionError("grad_check: function must return a scalar");
  return out.value()[0];
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& f, std::span<const NamedTensor> params, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("grad_check: eps must be positive");

  Tape tape;
  std::vector<Var> vars;
  for (const auto& p : params) vars.push_back(tape.parameter(p.name, p.value));
  Var out = f(tape, vars);
  if (!std::isfinite(out.value()[0])) throw NumericError("grad_check: function value is not finite");
  tape.backward(out);

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    auto base = p.value.values();
    std::vector<double> numeric(base.size());
    for (std::size_t e = 0; e < base.size(); ++e) {
      auto plus = base, minus = base;
      plus[e] += eps;
      minus[e] -= eps;
      const double fp = evaluate(f, params, i, Tensor(p.value.shape(), plus));
      const double fm = evaluate(f, params, i, Tensor(p.value.shape(), minus));
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericError("grad_check: non-finite evaluation while perturbing parameter '" + p.name + "' element " +
                           std::to_string(e));
      }
      numeric[e] = (fp - fm) / (2.0 * eps);
    }
    Tensor analytic = tape.grad(vars[i]);
    double diff2 = 0.0, num2 = 0.0, maxabs = 0.0;
    for (std::size_t e = 0; e < numeric.size(); ++e) {
      const double d = analytic[e] - numeric[e];
      diff2 += d * d;
      num2 += numeric[e] * numeric[e];
      maxabs = std::max(maxabs, std::abs(d));
    }
    ParamGradError err{p.name, std::sqrt(diff2) / (std::sqrt(num2) + 1e-12), maxabs, analytic,
                       Tensor(p.value.shape(), std::move(numeric))};
    report.max_rel_error = std::max(report.max_rel_error, err.rel_error);
    report.max_abs_error = std::max(report.max_abs_error, err.abs_error);
    report.params.push_back(std::move(err));
  }
  return report;
}

}  // namespace forge::num
