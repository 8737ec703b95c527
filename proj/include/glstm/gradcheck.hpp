#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "glstm/params.hpp"
#include "glstm/tape.hpp"

namespace glstm {

/// Builds a scalar loss on the tape from the store's current values. Must be
/// deterministic for fixed parameter values.
using TapeProgram = std::function<Var(Tape&, const ParamStore&)>;

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  bool finite = true;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double tolerance = 0.0;
  bool passed = true;

  /// Entry with the largest error (non-finite entries first); nullopt if empty.
  [[nodiscard]] std::optional<ParamCheck> worst() const;
};

/// |a - b| / max(1, |a|, |b|)
[[nodiscard]] double relative_error(double a, double b) noexcept;

/// Compares tape gradients against central differences with the given step.
/// `store` is perturbed in place and restored before returning. `tamper`
/// may edit the analytic gradients before comparison (negative controls).
GradCheckReport grad_check(const TapeProgram& program, ParamStore& store, double step, double tolerance,
                           const std::function<void(Gradients&)>& tamper = {});

}  // namespace glstm
