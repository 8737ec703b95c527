#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "glstm/cell.hpp"
#include "glstm/gradcheck.hpp"

namespace glstm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (without the program name) and returns the
/// process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct GradcheckOptions {
  std::size_t dim = 8;
  std::size_t nodes = 12;
  int layers = 2;
  std::uint64_t seed = 1;
  ForgetVariant forget = ForgetVariant::adaptive;
  bool residual = true;
  double step = 1e-4;
  double tolerance = 1e-4;
  /// Perturbs one analytic gradient entry before comparison.
  bool inject_fault = false;
};

/// Finite-difference check of a Graph LSTM stack on a random graph with
/// random node inputs, weights and targets. Node inputs, every layer
/// parameter and a softmax classifier are all checked.
GradCheckReport gradcheck_glstm(const GradcheckOptions& opt);

/// One row of an ablation grid: the variant's label and the settings it
/// overrides.
struct AblationVariant {
  std::string label;
  std::vector<std::pair<std::string, std::string>> settings;
  bool reference = false;
};
/// Throws ArgumentError for an unknown grid name.
std::vector<AblationVariant> ablation_grid(const std::string& which);

}  // namespace glstm::cli
