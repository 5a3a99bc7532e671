#pragma once

// Score-guided pseudo-labels. Candidate scores are ranked to obtain an
// adaptive per-scene threshold tau; the initial view is flagged for
// adjustment when it scores strictly below tau, and the adjustment points at
// the best-scoring candidate.

#include "pano/candidate_generation.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pano {

inline constexpr double kDefaultTopFraction = 0.25;

struct Labels {
  int y_s{0};
  double d_theta_deg{0.0};  ///< (-180, 180]
  double d_phi_deg{0.0};

  bool operator==(const Labels&) const = default;
};

struct SceneRecord {
  std::string scene_id;
  std::string erp_path;
  CameraPosed init_pose;
  std::optional<double> init_score;
  std::vector<CandidateView> candidates;
  std::optional<Labels> labels;
  std::optional<double> tau;
  /// Per-scene failure recorded by batch commands.
  std::optional<std::string> error;
  /// Fields this tool does not interpret, carried through unchanged.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  [[nodiscard]] bool fully_scored() const noexcept;
};

class ScorerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Composition scorer: higher is better. Implementations must be pure, so
/// the same scene and pose always give the same score, and reentrant.
class Scorer {
 public:
  virtual ~Scorer() = default;
  /// Scores every pose of one scene. Throws ScorerError on failure.
  [[nodiscard]] virtual std::vector<double> score_poses(
      const SceneRecord& scene, std::span<const CameraPosed> poses) const = 0;
};

/// Renders each pose from the scene's panorama and applies heuristic_score.
class HeuristicScorer final : public Scorer {
 public:
  explicit HeuristicScorer(CameraIntrinsicsd intrinsics = default_intrinsics<double>())
      : intrinsics_(intrinsics) {}
  [[nodiscard]] std::vector<double> score_poses(const SceneRecord& scene,
                                                std::span<const CameraPosed> poses) const override;

 private:
  CameraIntrinsicsd intrinsics_;
};

/// Scores looked up from `scene_id,theta_deg,phi_deg,score` rows; poses match
/// within 1e-6 degrees (longitude modulo 360).
class CsvScorer final : public Scorer {
 public:
  static CsvScorer from_file(const std::string& path);
  static CsvScorer from_string(const std::string& text);

  [[nodiscard]] std::vector<double> score_poses(const SceneRecord& scene,
                                                std::span<const CameraPosed> poses) const override;

 private:
  struct Row {
    CameraPosed pose;
    double score;
  };
  std::map<std::string, std::vector<Row>> rows_;
};

/// Scores from an arbitrary pure function of (scene, pose).
class PoseFunctionScorer final : public Scorer {
 public:
  using Function = std::function<double(const SceneRecord&, const CameraPosed&)>;
  explicit PoseFunctionScorer(Function fn) : fn_(std::move(fn)) {}
  [[nodiscard]] std::vector<double> score_poses(const SceneRecord& scene,
                                                std::span<const CameraPosed> poses) const override;

 private:
  Function fn_;
};

/// Score = minus the great-circle distance (degrees) to init + offset.
[[nodiscard]] PoseFunctionScorer planted_target_scorer(double d_theta_deg, double d_phi_deg);
[[nodiscard]] PoseFunctionScorer constant_scorer(double value);

/// The k-th largest score, k = max(1, round(top_fraction * M)).
[[nodiscard]] double adaptive_threshold(std::span<const double> scores, double top_fraction);

[[nodiscard]] int suggestion_label(double init_score, double tau) noexcept;

/// (dtheta, dphi) from `init` to the best-scoring candidate, or (0, 0) when
/// y_s = 0. Equal top scores prefer the smallest move, then list order.
[[nodiscard]] std::pair<double, double> adjustment_label(std::span<const CandidateView> candidates,
                                                         const CameraPosed& init, int y_s);

/// Scores the scene (unless every score is cached and `rescore` is false) and
/// fills tau and labels.
[[nodiscard]] SceneRecord label_scene(SceneRecord scene, const Scorer& scorer, double top_fraction,
                                      bool rescore = false);

/// Composition proxy used when no learned scorer is available.
///
/// With luminance Y = (0.299 R + 0.587 G + 0.114 B) / 255 and central
/// differences gx, gy over interior pixels, gradient energy e = gx^2 + gy^2:
///
///   energy = 1000 * mean(w * e), where w is the strongest of four Gaussian
///            bumps (sigma = 1/6 in normalized image coordinates) centred on
///            the rule-of-thirds intersections;
///   tilt   = 0.5 * atan2(sum 2 gx gy, sum (gy^2 - gx^2)) over pixels with
///            |gy| > |gx| and e > 1e-4, i.e. the energy-weighted orientation of
///            near-horizontal edges, in radians;
///   score  = energy - |tilt|.
[[nodiscard]] double heuristic_score(const RgbImage& view);

}  // namespace pano
