#include "glstm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace glstm {

double relative_error(double a, double b) noexcept {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

std::optional<ParamCheck> GradCheckReport::worst() const {
  if (params.empty()) return std::nullopt;
  return *std::max_element(params.begin(), params.end(), [](const ParamCheck& x, const ParamCheck& y) {
    if (x.finite != y.finite) return x.finite;
    return x.max_rel_error < y.max_rel_error;
  });
}

GradCheckReport grad_check(const TapeProgram& program, ParamStore& store, double step, double tolerance,
                           const std::function<void(Gradients&)>& tamper) {
  GradCheckReport report;
  report.tolerance = tolerance;

  Gradients analytic(store);
  {
    Tape tape;
    const Var loss = program(tape, store);
    tape.backward(loss);
    tape.accumulate(analytic);
  }
  if (tamper) tamper(analytic);

  auto evaluate = [&] {
    Tape tape;
    return tape.value(program(tape, store)).data[0];
  };

  for (std::size_t i = 0; i < store.size(); ++i) {
    ParamCheck check{store[i].name};
    Tensor& value = store[i].value;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double saved = value.data[k];
      value.data[k] = saved + step;
      const double up = evaluate();
      value.data[k] = saved - step;
      const double down = evaluate();
      value.data[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = analytic[i].data[k];
      if (!std::isfinite(numeric) || !std::isfinite(exact)) {
        check.finite = false;
        continue;
      }
      check.max_rel_error = std::max(check.max_rel_error, relative_error(exact, numeric));
    }
    if (!check.finite || !(check.max_rel_error < tolerance)) report.passed = false;
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace glstm
