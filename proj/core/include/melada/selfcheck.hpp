#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace melada {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast runtime invariant suite: autodiff against finite differences, GRL
/// contract, second-order derivative, controller permutation invariance,
/// barycenter identity, MMND properties, band energy, Adam, and
/// serialization round trips.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed = 7);

}  // namespace melada
