#include "pano/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace pano {

namespace {

// Summation of sorted terms, so the result does not depend on record order.
double order_free_mean(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(terms.size());
}

void check_pairs(std::span<const Vector2d> preds, std::span<const Vector2d> gts, const char* what) {
  if (preds.size() != gts.size()) throw std::invalid_argument(std::string(what) + ": size mismatch");
  if (preds.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

}  // namespace

EvalRecord make_eval_record(std::string scene_id, const Labels& gt, double prob,
                            double d_theta_deg, double d_phi_deg, double threshold) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
  EvalRecord r;
  r.scene_id = std::move(scene_id);
  r.gt = gt;
  r.pred_suggest_prob = prob;
  r.pred_suggest = prob >= threshold ? 1 : 0;
  r.pred_d_theta_deg = d_theta_deg;
  r.pred_d_phi_deg = d_phi_deg;
  return r;
}

double roc_auc(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) throw std::invalid_argument("roc_auc: size mismatch");
  std::uint64_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("roc_auc: labels must be 0/1");
    if (std::isnan(probs[i])) throw std::invalid_argument("roc_auc: NaN score");
    n_pos += static_cast<std::uint64_t>(labels[i]);
  }
  const std::uint64_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("roc_auc: both classes are required (positives=" +
                                std::to_string(n_pos) + ", negatives=" + std::to_string(n_neg) + ")");
  }

  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });

  // Twice the average rank of a tie block occupying 1-based ranks first+1..last
  // is first + 1 + last, which keeps everything in integers.
  std::uint64_t doubled_rank_sum = 0;
  std::size_t first = 0;
  while (first < order.size()) {
    std::size_t last = first + 1;
    while (last < order.size() && probs[order[last]] == probs[order[first]]) ++last;
    const std::uint64_t doubled = first + 1 + last;
    for (std::size_t k = first; k < last; ++k) {
      if (labels[order[k]] == 1) doubled_rank_sum += doubled;
    }
    first = last;
  }
  const std::uint64_t doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(doubled_u) / static_cast<double>(2 * n_pos * n_neg);
}

double cs_metric(std::span<const Vector2d> preds, std::span<const Vector2d> gts) {
  check_pairs(preds, gts, "cs_metric");
  std::vector<double> terms;
  terms.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double gg = gts[i].squaredNorm();
    if (gg == 0.0) throw std::invalid_argument("cs_metric: zero ground-truth vector");
    const double pp = preds[i].squaredNorm();
    // sqrt(a * a) == a in binary floating point, so identical vectors give exactly 1.
    terms.push_back(pp == 0.0 ? 0.0 : preds[i].dot(gts[i]) / std::sqrt(pp * gg));
  }
  return order_free_mean(std::move(terms));
}

double mae_metric(std::span<const Vector2d> preds, std::span<const Vector2d> gts) {
  check_pairs(preds, gts, "mae_metric");
  std::vector<double> terms;
  terms.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Vector2d d = (preds[i] - gts[i]).cwiseAbs();
    terms.push_back(deg_to_rad((d.x() + d.y()) / 2.0));
  }
  return order_free_mean(std::move(terms));
}

Confusion confusion_partition(std::span<const EvalRecord> records) {
  Confusion c;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool pred = records[i].pred_suggest == 1;
    const bool gt = records[i].gt.y_s == 1;
    if (pred && gt) c.tp.push_back(i);
    else if (pred) c.fp.push_back(i);
    else if (gt) c.fn.push_back(i);
    else c.tn.push_back(i);
  }
  return c;
}

CameraPosed apply_adjustment(const CameraPosed& init, double d_theta_deg, double d_phi_deg) {
  return {wrap_degrees(init.theta_deg + d_theta_deg),
          std::clamp(init.phi_deg + d_phi_deg, -90.0, 90.0)};
}

double sph_iou_metric(std::span<const EvalRecord> records, std::span<const CameraPosed> init_poses,
                      const CameraIntrinsicsd& k, IouSubset subset) {
  if (records.size() != init_poses.size()) {
    throw std::invalid_argument("sph_iou_metric: records and init poses differ in length");
  }
  const Confusion c = confusion_partition(records);
  std::vector<std::size_t> chosen = c.tp;
  if (subset == IouSubset::Predicted) chosen.insert(chosen.end(), c.fp.begin(), c.fp.end());
  if (chosen.empty()) {
    throw std::invalid_argument("sph_iou_metric: empty subset (tp=" + std::to_string(c.tp.size()) +
                                ", fp=" + std::to_string(c.fp.size()) +
                                ", tn=" + std::to_string(c.tn.size()) +
                                ", fn=" + std::to_string(c.fn.size()) + ", records=" + std::to_string(records.size()) + ")");
  }
  std::vector<double> terms;
  terms.reserve(chosen.size());
  for (std::size_t i : chosen) {
    const EvalRecord& r = records[i];
    const CameraPosed pred = apply_adjustment(init_poses[i], r.pred_d_theta_deg, r.pred_d_phi_deg);
    const CameraPosed gt = apply_adjustment(init_poses[i], r.gt.d_theta_deg, r.gt.d_phi_deg);
    terms.push_back(sph_iou(view_rect_of(pred, k), view_rect_of(gt, k)));
  }
  return order_free_mean(std::move(terms));
}

}  // namespace pano
