#pragma once

// Evaluation of suggestion probabilities and adjustment predictions.

#include "pano/labeling.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pano {

inline constexpr double kDefaultDecisionThreshold = 0.5;

struct EvalRecord {
  std::string scene_id;
  Labels gt;
  double pred_suggest_prob{0.0};
  int pred_suggest{0};
  double pred_d_theta_deg{0.0};
  double pred_d_phi_deg{0.0};
};

/// Builds a record, deriving pred_suggest = (prob >= threshold).
[[nodiscard]] EvalRecord make_eval_record(std::string scene_id, const Labels& gt, double prob,
                                          double d_theta_deg, double d_phi_deg,
                                          double threshold = kDefaultDecisionThreshold);

/// P(score+ > score-) + 0.5 P(tie) from average ranks. Throws unless both
/// classes are present.
[[nodiscard]] double roc_auc(std::span<const double> probs, std::span<const int> labels);

/// Mean cosine similarity. Zero-norm predictions count as cosine 0; zero
/// ground truth vectors are rejected.
[[nodiscard]] double cs_metric(std::span<const Vector2d> preds, std::span<const Vector2d> gts);

/// Mean absolute component error, inputs in degrees, result in radians.
[[nodiscard]] double mae_metric(std::span<const Vector2d> preds, std::span<const Vector2d> gts);

struct Confusion {
  std::vector<std::size_t> tp, fp, tn, fn;
};

[[nodiscard]] Confusion confusion_partition(std::span<const EvalRecord> records);

enum class IouSubset { TruePositive, Predicted };  // TP, TP + FP

/// init + (dtheta, dphi) with longitude wrapped and latitude clamped to the poles.
[[nodiscard]] CameraPosed apply_adjustment(const CameraPosed& init, double d_theta_deg,
                                           double d_phi_deg);

/// Mean spherical IoU between the views at init + predicted adjustment and
/// init + ground-truth adjustment over the chosen subset.
[[nodiscard]] double sph_iou_metric(std::span<const EvalRecord> records,
                                    std::span<const CameraPosed> init_poses,
                                    const CameraIntrinsicsd& k, IouSubset subset);

}  // namespace pano
