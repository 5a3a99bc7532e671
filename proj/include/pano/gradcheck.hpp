#pragma once

// Finite-difference verification of the model_math gradients plus the exact
// invariants (gating, anchor symmetry, single-expert mixing).

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace pano {

inline constexpr double kGradcheckStep = 1e-6;
inline constexpr double kGradcheckTolerance = 1e-5;

struct GradcheckRow {
  std::string name;
  int trials{0};
  double max_rel_error{0.0};  ///< 0 for exact checks
  bool passed{true};
  std::string detail;
};

struct GradcheckReport {
  std::vector<GradcheckRow> rows;
  double seconds{0.0};
  [[nodiscard]] bool passed() const;
};

[[nodiscard]] GradcheckReport run_gradcheck(std::uint64_t seed, int trials);

void print_gradcheck(const GradcheckReport& report, std::ostream& out);

}  // namespace pano
