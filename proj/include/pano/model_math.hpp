#pragma once

// Forward values and analytic gradients for the composition model's scoring
// and training objectives: quality-weighted scoring against five prompt
// anchors, the regression / ranking losses of the quality assessor, softmax
// gating with mixture-of-experts mixing, and the gated suggestion-adjustment
// loss.
//
// Everything is templated on the scalar type and takes Eigen expressions.
// Batches of 2-vectors are N x 2 matrices, one sample per row.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pano::model {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using MatrixX2 = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
template <typename Scalar>
using Vector5 = Eigen::Matrix<Scalar, 5, 1>;

inline constexpr int kQualityLevels = 5;
inline constexpr double kDefaultTemperature = 0.07;
inline constexpr double kDefaultRankWeight = 0.1;  // weight on the q-consistency term
inline constexpr double kNormGuard = 1e-12;

template <typename Scalar>
struct LossResult {
  Scalar value{0};
  VectorX<Scalar> grad;  ///< d value / d pred
};

template <typename Scalar>
struct PairLossResult {
  Scalar value{0};
  MatrixX2<Scalar> grad;  ///< d value / d pred, same shape as pred
};

/// Numerically stable softmax of a column vector.
template <typename Derived>
[[nodiscard]] VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = logits.maxCoeff();
  VectorX<Scalar> e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

/// unit(x + adapter * x). Throws when the residual sum vanishes.
template <typename DerivedX, typename DerivedA>
[[nodiscard]] VectorX<typename DerivedX::Scalar> residual_adapt(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedA>& adapter) {
  using Scalar = typename DerivedX::Scalar;
  if (adapter.rows() != x.rows() || adapter.cols() != x.rows()) {
    throw std::invalid_argument("adapter must be a square map matching the feature size");
  }
  VectorX<Scalar> r = x + adapter * x;
  const Scalar n = r.norm();
  if (!(n > Scalar(0))) throw std::invalid_argument("residual adaptation produced a zero vector");
  return r / n;
}

/// Five adapted prompt embeddings, one per column, ordered from the lowest
/// quality word to the highest. Anchor values are 1..5 in that order.
template <typename Scalar>
struct PromptSet {
  Eigen::Matrix<Scalar, Eigen::Dynamic, kQualityLevels> prompts;

  [[nodiscard]] static Vector5<Scalar> anchors() {
    return (Vector5<Scalar>() << 1, 2, 3, 4, 5).finished();
  }
};

/// Softmax of similarity / sigma over the five prompt similarities.
template <typename Derived>
[[nodiscard]] Vector5<typename Derived::Scalar> quality_weights_from_similarities(
    const Eigen::MatrixBase<Derived>& sims, typename Derived::Scalar sigma) {
  using Scalar = typename Derived::Scalar;
  if (!(sigma > Scalar(0))) throw std::invalid_argument("temperature must be positive");
  if (sims.size() != kQualityLevels) throw std::invalid_argument("expected 5 similarities");
  return softmax(Vector5<Scalar>(sims / sigma));
}

template <typename Derived, typename Scalar = typename Derived::Scalar>
[[nodiscard]] Vector5<Scalar> quality_weights(const Eigen::MatrixBase<Derived>& image,
                                              const PromptSet<Scalar>& prompts, Scalar sigma) {
  if (prompts.prompts.rows() != image.rows()) {
    throw std::invalid_argument("prompt and image feature sizes differ");
  }
  return quality_weights_from_similarities(Vector5<Scalar>(prompts.prompts.transpose() * image),
                                           sigma);
}

/// q = sum_i W_i * C_i with anchors C = 1..5. W must sum to 1 (within 1e-9),
/// which allows the symmetric form 3 + 2 (W5 - W1) + (W4 - W2): mirrored
/// weights cancel exactly, so uniform weights give exactly 3.
template <typename Derived>
[[nodiscard]] typename Derived::Scalar weighted_score(const Eigen::MatrixBase<Derived>& weights) {
  using Scalar = typename Derived::Scalar;
  if (weights.size() != kQualityLevels) throw std::invalid_argument("expected 5 quality weights");
  if (!(std::abs(weights.sum() - Scalar(1)) <= Scalar(1e-9)) || (weights.array() < 0).any()) {
    throw std::invalid_argument("quality weights must form a probability vector");
  }
  return Scalar(3) + Scalar(2) * (weights(4) - weights(0)) + (weights(3) - weights(1));
}

template <typename Derived, typename Scalar = typename Derived::Scalar>
[[nodiscard]] VectorX<Scalar> weighted_text_features(const Eigen::MatrixBase<Derived>& weights,
                                                     const PromptSet<Scalar>& prompts) {
  if (weights.size() != kQualityLevels) throw std::invalid_argument("expected 5 quality weights");
  return prompts.prompts * weights;
}

// ---------------------------------------------------------------------------
// Quality-assessor losses

template <typename DerivedP, typename DerivedT>
[[nodiscard]] LossResult<typename DerivedP::Scalar> loss_mse(
    const Eigen::MatrixBase<DerivedP>& pred, const Eigen::MatrixBase<DerivedT>& target) {
  using Scalar = typename DerivedP::Scalar;
  if (pred.size() == 0) throw std::invalid_argument("mse needs at least one sample");
  if (pred.size() != target.size()) throw std::invalid_argument("mse size mismatch");
  const Scalar n = Scalar(pred.size());
  const VectorX<Scalar> diff = pred - target;
  return {diff.squaredNorm() / n, VectorX<Scalar>(Scalar(2) / n * diff)};
}

/// Pairwise ranking hinge over unordered pairs i < j:
///   max(0, -sign(t_i - t_j) * ((p_i - p_j) - (t_i - t_j))) / (N (N - 1) / 2).
/// Pairs with tied targets contribute nothing; the kink gets subgradient 0.
template <typename DerivedP, typename DerivedT>
[[nodiscard]] LossResult<typename DerivedP::Scalar> loss_rank(
    const Eigen::MatrixBase<DerivedP>& pred, const Eigen::MatrixBase<DerivedT>& target) {
  using Scalar = typename DerivedP::Scalar;
  const Eigen::Index n = pred.size();
  if (n < 2) throw std::invalid_argument("ranking loss needs at least two samples");
  if (target.size() != n) throw std::invalid_argument("ranking loss size mismatch");
  const Scalar pairs = Scalar(n) * Scalar(n - 1) / Scalar(2);
  LossResult<Scalar> out{Scalar(0), VectorX<Scalar>::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Scalar dt = target(i) - target(j);
      const Scalar sign = Scalar((dt > 0) - (dt < 0));
      if (sign == Scalar(0)) continue;
      const Scalar hinge = -sign * ((pred(i) - pred(j)) - dt);
      if (hinge > Scalar(0)) {
        out.value += hinge;
        out.grad(i) -= sign;
        out.grad(j) += sign;
      }
    }
  }
  out.value /= pairs;
  out.grad /= pairs;
  return out;
}

template <typename Scalar>
[[nodiscard]] Scalar loss_ccqa_total(Scalar l1, Scalar l2, Scalar l3,
                                     Scalar alpha = Scalar(kDefaultRankWeight)) {
  return l1 + l2 + alpha * l3;
}

// ---------------------------------------------------------------------------
// Gating and experts

template <typename Scalar>
struct LinearMap {
  MatrixX<Scalar> weight;
  VectorX<Scalar> bias;

  template <typename Derived>
  [[nodiscard]] VectorX<Scalar> operator()(const Eigen::MatrixBase<Derived>& x) const {
    return weight * x + bias;
  }
};

/// Per-task softmax gates over M experts and the experts themselves
/// (D -> D linear maps here; any caller-supplied outputs work with moe_mix).
template <typename Scalar>
struct GateConfig {
  std::vector<LinearMap<Scalar>> task_gates;  ///< each M x D
  std::vector<LinearMap<Scalar>> experts;     ///< each D x D

  [[nodiscard]] Eigen::Index expert_count() const noexcept {
    return static_cast<Eigen::Index>(experts.size());
  }

  void validate(Eigen::Index feature_dim) const {
    if (experts.empty()) throw std::invalid_argument("need at least one expert");
    for (const auto& g : task_gates) {
      if (g.weight.rows() != expert_count() || g.weight.cols() != feature_dim ||
          g.bias.size() != expert_count()) {
        throw std::invalid_argument("gate parameters do not match expert count / feature size");
      }
    }
    for (const auto& e : experts) {
      if (e.weight.rows() != feature_dim || e.weight.cols() != feature_dim ||
          e.bias.size() != feature_dim) {
        throw std::invalid_argument("expert parameters do not match feature size");
      }
    }
  }
};

template <typename Derived, typename Scalar = typename Derived::Scalar>
[[nodiscard]] VectorX<Scalar> gate_weights(const Eigen::MatrixBase<Derived>& x,
                                           const GateConfig<Scalar>& cfg, std::size_t task) {
  cfg.validate(x.rows());
  if (task >= cfg.task_gates.size()) throw std::out_of_range("no gate for task");
  return softmax(cfg.task_gates[task](x));
}

/// D x M matrix whose column m is expert m applied to x.
template <typename Derived, typename Scalar = typename Derived::Scalar>
[[nodiscard]] MatrixX<Scalar> expert_outputs(const Eigen::MatrixBase<Derived>& x,
                                             const GateConfig<Scalar>& cfg) {
  cfg.validate(x.rows());
  MatrixX<Scalar> out(x.rows(), cfg.expert_count());
  for (Eigen::Index m = 0; m < cfg.expert_count(); ++m) out.col(m) = cfg.experts[m](x);
  return out;
}

/// f = sum_m gates_m * expert_outputs.col(m).
template <typename DerivedG, typename DerivedE>
[[nodiscard]] VectorX<typename DerivedG::Scalar> moe_mix(
    const Eigen::MatrixBase<DerivedG>& gates, const Eigen::MatrixBase<DerivedE>& expert_outputs) {
  if (gates.size() != expert_outputs.cols()) {
    throw std::invalid_argument("gate count does not match expert count");
  }
  return expert_outputs * gates;
}

// ---------------------------------------------------------------------------
// Suggestion / adjustment losses

/// Mean two-class softmax cross-entropy; labels are 0 or 1.
template <typename Derived>
[[nodiscard]] PairLossResult<typename Derived::Scalar> loss_suggest(
    const Eigen::MatrixBase<Derived>& logits, const Eigen::VectorXi& labels) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = logits.rows();
  if (logits.cols() != 2) throw std::invalid_argument("suggestion logits must be N x 2");
  if (labels.size() != n) throw std::invalid_argument("suggestion label count mismatch");
  if (n == 0) throw std::invalid_argument("suggestion loss needs at least one sample");
  PairLossResult<Scalar> out{Scalar(0), MatrixX2<Scalar>::Zero(n, 2)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels(i);
    if (y != 0 && y != 1) throw std::invalid_argument("suggestion labels must be 0 or 1");
    const Scalar top = std::max(logits(i, 0), logits(i, 1));
    const Scalar e0 = std::exp(logits(i, 0) - top);
    const Scalar e1 = std::exp(logits(i, 1) - top);
    const Scalar lse = top + std::log(e0 + e1);
    out.value += lse - logits(i, y);
    out.grad(i, 0) = e0 / (e0 + e1);
    out.grad(i, 1) = e1 / (e0 + e1);
    out.grad(i, y) -= Scalar(1);
  }
  out.value /= Scalar(n);
  out.grad /= Scalar(n);
  return out;
}

/// 1 - mean cosine similarity between predicted and target adjustments.
template <typename DerivedP, typename DerivedT>
[[nodiscard]] PairLossResult<typename DerivedP::Scalar> loss_cs(
    const Eigen::MatrixBase<DerivedP>& pred, const Eigen::MatrixBase<DerivedT>& target) {
  using Scalar = typename DerivedP::Scalar;
  const Eigen::Index n = pred.rows();
  if (pred.cols() != 2 || target.cols() != 2 || target.rows() != n) {
    throw std::invalid_argument("cosine loss expects matching N x 2 inputs");
  }
  if (n == 0) throw std::invalid_argument("cosine loss needs at least one sample");
  PairLossResult<Scalar> out{Scalar(0), MatrixX2<Scalar>::Zero(n, 2)};
  Scalar cos_sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Matrix<Scalar, 2, 1> p = pred.row(i).transpose();
    const Eigen::Matrix<Scalar, 2, 1> t = target.row(i).transpose();
    const Scalar pn = p.norm();
    const Scalar tn = t.norm();
    if (tn == Scalar(0)) throw std::invalid_argument("cosine loss target is the zero vector");
    if (pn < Scalar(kNormGuard)) throw std::invalid_argument("cosine loss prediction has zero norm");
    const Scalar cos = p.dot(t) / (pn * tn);
    cos_sum += cos;
    out.grad.row(i) = -(t / (pn * tn) - cos * p / (pn * pn)).transpose() / Scalar(n);
  }
  out.value = Scalar(1) - cos_sum / Scalar(n);
  return out;
}

/// Mean squared difference of Euclidean norms.
template <typename DerivedP, typename DerivedT>
[[nodiscard]] PairLossResult<typename DerivedP::Scalar> loss_norm(
    const Eigen::MatrixBase<DerivedP>& pred, const Eigen::MatrixBase<DerivedT>& target) {
  using Scalar = typename DerivedP::Scalar;
  const Eigen::Index n = pred.rows();
  if (pred.cols() != 2 || target.cols() != 2 || target.rows() != n) {
    throw std::invalid_argument("norm loss expects matching N x 2 inputs");
  }
  if (n == 0) throw std::invalid_argument("norm loss needs at least one sample");
  PairLossResult<Scalar> out{Scalar(0), MatrixX2<Scalar>::Zero(n, 2)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar pn = pred.row(i).norm();
    const Scalar diff = pn - target.row(i).norm();
    out.value += diff * diff;
    out.grad.row(i) = Scalar(2) * diff * pred.row(i) / std::max(pn, Scalar(kNormGuard));
  }
  out.value /= Scalar(n);
  out.grad /= Scalar(n);
  return out;
}

template <typename Scalar>
struct AdjustmentBatch {
  MatrixX2<Scalar> suggest_logits;
  MatrixX2<Scalar> pred_adjust;
  MatrixX2<Scalar> target_adjust;
  Eigen::VectorXi y_s;

  void validate() const {
    const Eigen::Index n = y_s.size();
    if (suggest_logits.rows() != n || pred_adjust.rows() != n || target_adjust.rows() != n) {
      throw std::invalid_argument("adjustment batch fields have different lengths");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (y_s(i) == 0 && !target_adjust.row(i).isZero(0)) {
        throw std::invalid_argument("sample without suggestion must have a zero adjustment target");
      }
    }
  }
};

template <typename Scalar>
struct CpamLoss {
  Scalar value{0};
  Scalar suggest{0};
  Scalar cs{0};
  Scalar norm{0};
  Eigen::Index positives{0};
  MatrixX2<Scalar> grad_logits;
  MatrixX2<Scalar> grad_adjust;  ///< exactly zero on rows with y_s = 0
};

/// Suggestion loss over the whole batch plus the adjustment loss
/// (cosine + norm) averaged over the samples with y_s = 1 only.
template <typename Scalar>
[[nodiscard]] CpamLoss<Scalar> loss_cpam_total(const AdjustmentBatch<Scalar>& batch) {
  batch.validate();
  const Eigen::Index n = batch.y_s.size();
  const auto suggest = loss_suggest(batch.suggest_logits, batch.y_s);

  CpamLoss<Scalar> out;
  out.suggest = suggest.value;
  out.grad_logits = suggest.grad;
  out.grad_adjust = MatrixX2<Scalar>::Zero(n, 2);

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (batch.y_s(i) == 1) rows.push_back(i);
  }
  out.positives = static_cast<Eigen::Index>(rows.size());
  if (!rows.empty()) {
    MatrixX2<Scalar> pred(out.positives, 2), target(out.positives, 2);
    for (Eigen::Index r = 0; r < out.positives; ++r) {
      pred.row(r) = batch.pred_adjust.row(rows[r]);
      target.row(r) = batch.target_adjust.row(rows[r]);
    }
    const auto cs = loss_cs(pred, target);
    const auto nm = loss_norm(pred, target);
    out.cs = cs.value;
    out.norm = nm.value;
    for (Eigen::Index r = 0; r < out.positives; ++r) {
      out.grad_adjust.row(rows[r]) = cs.grad.row(r) + nm.grad.row(r);
    }
  }
  out.value = out.suggest + out.cs + out.norm;
  return out;
}

}  // namespace pano::model
