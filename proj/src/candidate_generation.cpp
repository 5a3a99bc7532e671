#include "pano/candidate_generation.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace pano {

void GenerationConfig::validate() const {
  if (!(step_theta_deg > 0.0) || !(step_phi_deg > 0.0)) {
    throw std::invalid_argument("candidate step sizes must be positive");
  }
  if (m_max < 1) throw std::invalid_argument("m_max must be at least 1");
  const double lo = test_mode ? 0.0 : 0.5;
  if (!(lambda >= lo && lambda < 1.0)) {
    throw std::invalid_argument(test_mode ? "lambda must lie in [0, 1)"
                                          : "lambda must lie in [0.5, 1) outside test mode");
  }
}

std::optional<CameraPosed> wrap_pose(double theta_deg, double phi_deg) {
  if (!std::isfinite(theta_deg) || !std::isfinite(phi_deg)) return std::nullopt;
  if (std::abs(phi_deg) > 90.0) return std::nullopt;
  return CameraPosed{wrap_degrees(theta_deg), phi_deg};
}

std::vector<NeighborPose> moore_neighbors(const CameraPosed& pose, const GenerationConfig& cfg,
                                          int m) {
  if (m < 1) throw std::invalid_argument("ring multiplier must be at least 1");
  static constexpr std::array<std::array<int, 2>, 8> kOffsets = {{
      {-1, 1}, {0, 1}, {1, 1},
      {-1, 0},         {1, 0},
      {-1, -1}, {0, -1}, {1, -1},
  }};
  std::vector<NeighborPose> out;
  out.reserve(8);
  for (int n = 0; n < 8; ++n) {
    const double dt = kOffsets[n][0] * m * cfg.step_theta_deg;
    const double dp = kOffsets[n][1] * m * cfg.step_phi_deg;
    if (auto p = wrap_pose(pose.theta_deg + dt, pose.phi_deg + dp)) out.push_back({*p, n});
  }
  return out;
}

std::vector<CandidateView> generate_candidates(const CameraPosed& init,
                                               const GenerationConfig& cfg) {
  cfg.validate();
  const SphericalRectd init_rect = view_rect_of(init, cfg.intrinsics);
  std::vector<CandidateView> out;
  for (int m = 1; m <= cfg.m_max; ++m) {
    for (const auto& [pose, neighbor] : moore_neighbors(init, cfg, m)) {
      if (same_pose(pose, init)) continue;
      bool duplicate = false;
      for (const auto& c : out) duplicate = duplicate || same_pose(c.pose, pose);
      if (duplicate) continue;
      if (sph_overlap(view_rect_of(pose, cfg.intrinsics), init_rect) > cfg.lambda) {
        out.push_back({pose, m, neighbor, std::nullopt});
      }
    }
  }
  return out;
}

double signed_arc_deg(double from, double to) noexcept {
  double d = std::fmod(to - from, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

bool same_pose(const CameraPosed& a, const CameraPosed& b, double tol) noexcept {
  return std::abs(signed_arc_deg(a.theta_deg, b.theta_deg)) <= tol &&
         std::abs(a.phi_deg - b.phi_deg) <= tol;
}

}  // namespace pano
