#pragma once

// Candidate camera poses around an initial pose: Moore-neighbourhood rings at
// multiples of the step size, kept only while they preserve enough of the
// initial view (spherical overlap strictly above lambda).

#include "pano/view_projection.hpp"

#include <optional>
#include <vector>

namespace pano {

struct GenerationConfig {
  double step_theta_deg{5.0};
  double step_phi_deg{5.0};
  int m_max{10};
  double lambda{0.5};
  /// Permits lambda below 0.5; only meant for tests and diagnostics.
  bool test_mode{false};
  CameraIntrinsicsd intrinsics{default_intrinsics<double>()};

  void validate() const;
};

struct CandidateView {
  CameraPosed pose;
  int ring{1};       ///< multiplier m >= 1
  int neighbor{0};   ///< 0..7, row-major over the 3x3 offset grid minus its center
  std::optional<double> score;
};

/// Longitude reduced into [-180, 180); latitudes past a pole are rejected.
[[nodiscard]] std::optional<CameraPosed> wrap_pose(double theta_deg, double phi_deg);

struct NeighborPose {
  CameraPosed pose;
  int neighbor{0};
};

/// The eight offsets (+-m dtheta, +-m dphi) in row-major grid order, starting
/// with the upper-left (-dtheta, +dphi). Poles are not crossed.
[[nodiscard]] std::vector<NeighborPose> moore_neighbors(const CameraPosed& pose,
                                                        const GenerationConfig& cfg, int m);

[[nodiscard]] std::vector<CandidateView> generate_candidates(const CameraPosed& init,
                                                             const GenerationConfig& cfg);

/// Shortest signed arc from `from` to `to` in degrees, in (-180, 180].
[[nodiscard]] double signed_arc_deg(double from, double to) noexcept;

/// Poses equal within `tol` degrees, with longitude compared modulo 360.
[[nodiscard]] bool same_pose(const CameraPosed& a, const CameraPosed& b, double tol = 1e-9) noexcept;

}  // namespace pano
