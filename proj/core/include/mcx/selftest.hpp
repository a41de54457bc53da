#pragma once

#include <string>
#include <vector>

namespace mcx {

struct SelfTestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast oracle checks (exact stationarity, leapfrog reversibility, gradient
/// fidelity, ESS calibration, advisor examples). Deterministic; about a second.
std::vector<SelfTestResult> run_selftests();

}  // namespace mcx
