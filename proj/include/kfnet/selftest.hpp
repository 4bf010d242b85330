#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kfnet/mlp.hpp"

namespace kfnet {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Measured worst-case error (or 0/1 for exact checks).
  double value = 0.0;
  double threshold = 0.0;
};

/// Replaceable pieces, so a deliberately broken implementation can be fed
/// in to confirm the checks catch it.
struct SelftestHooks {
  std::function<JacobianRow(const DmlpNetwork&, const ForwardCache&)> jacobian = jacobian_bp;
};

/// Fast invariant suite: gradient checks, filter identities, reductions and
/// metric properties. Deterministic; runs in well under a minute.
std::vector<CheckResult> run_selftest(const SelftestHooks& hooks = {});

}  // namespace kfnet
