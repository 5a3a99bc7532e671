#include "pano/gradcheck.hpp"

#include "pano/model_math.hpp"
#include "pano/sphere_geometry.hpp"
#include "pano/synth.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <stdexcept>

namespace pano {

namespace {

using model::MatrixX;
using model::MatrixX2;
using model::VectorX;

constexpr Eigen::Index kN = 6;

GradcheckRow make_row(const std::string& name, int trials) {
  GradcheckRow row;
  row.name = name;
  row.trials = trials;
  return row;
}

// Relative error of two gradient vectors, floored so that two near-zero
// gradients compare as equal.
double relative_error(const MatrixX<double>& analytic, const MatrixX<double>& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-8});
  return (analytic - numeric).norm() / scale;
}

MatrixX<double> central_difference(const std::function<double(const MatrixX<double>&)>& f,
                                   MatrixX<double> x) {
  MatrixX<double> g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x(i);
    x(i) = saved + kGradcheckStep;
    const double up = f(x);
    x(i) = saved - kGradcheckStep;
    const double down = f(x);
    x(i) = saved;
    g(i) = (up - down) / (2.0 * kGradcheckStep);
  }
  return g;
}

MatrixX<double> random_matrix(SplitRandom& rng, Eigen::Index rows, Eigen::Index cols, double lo,
                              double hi) {
  MatrixX<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(lo, hi);
  return m;
}

// 2-vectors with norm in [0.5, 2], away from the origin where the norm
// gradient is undefined.
MatrixX2<double> random_pairs(SplitRandom& rng, Eigen::Index n) {
  MatrixX2<double> m(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = rng.uniform(0.0, 2.0 * kPi<double>);
    const double r = rng.uniform(0.5, 2.0);
    m(i, 0) = r * std::cos(a);
    m(i, 1) = r * std::sin(a);
  }
  return m;
}

// True when some pair of the ranking loss sits within `margin` of its kink.
bool near_rank_kink(const VectorX<double>& p, const VectorX<double>& t, double margin) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    for (Eigen::Index j = i + 1; j < p.size(); ++j) {
      if (t(i) == t(j)) continue;
      if (std::abs((p(i) - p(j)) - (t(i) - t(j))) < margin) return true;
    }
  }
  return false;
}

GradcheckRow check_loss(const std::string& name, int trials,
                        const std::function<double(SplitRandom&)>& one_trial, SplitRandom& rng) {
  GradcheckRow row = make_row(name, trials);
  for (int k = 0; k < trials; ++k) row.max_rel_error = std::max(row.max_rel_error, one_trial(rng));
  row.passed = row.max_rel_error < kGradcheckTolerance;
  return row;
}

}  // namespace

bool GradcheckReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const GradcheckRow& r) { return r.passed; });
}

GradcheckReport run_gradcheck(std::uint64_t seed, int trials) {
  if (trials < 1) throw std::invalid_argument("gradcheck needs at least one trial");
  const auto start = std::chrono::steady_clock::now();
  SplitRandom rng(seed);
  GradcheckReport report;

  report.rows.push_back(check_loss("mse", trials, [](SplitRandom& r) {
    const VectorX<double> t = random_matrix(r, kN, 1, 1.0, 5.0);
    const VectorX<double> p = random_matrix(r, kN, 1, 1.0, 5.0);
    const auto res = model::loss_mse(p, t);
    const auto num = central_difference([&](const MatrixX<double>& x) {
      return model::loss_mse(VectorX<double>(x), t).value;
    }, p);
    return relative_error(res.grad, num);
  }, rng));

  report.rows.push_back(check_loss("rank", trials, [](SplitRandom& r) {
    VectorX<double> t, p;
    do {
      t = random_matrix(r, kN, 1, 1.0, 5.0);
      p = random_matrix(r, kN, 1, 1.0, 5.0);
    } while (near_rank_kink(p, t, 1e-4));
    const auto res = model::loss_rank(p, t);
    const auto num = central_difference([&](const MatrixX<double>& x) {
      return model::loss_rank(VectorX<double>(x), t).value;
    }, p);
    return relative_error(res.grad, num);
  }, rng));

  // The quality-score regression term: mse on q = weighted_score(softmax(s / sigma)),
  // differentiated with respect to the prompt similarities s.
  report.rows.push_back(check_loss("score_mse", trials, [](SplitRandom& r) {
    const double sigma = model::kDefaultTemperature;
    const double target = r.uniform(1.0, 5.0);
    const VectorX<double> s = random_matrix(r, 5, 1, -0.05, 0.05);
    const auto loss_of = [&](const VectorX<double>& sims) {
      const double q = model::weighted_score(model::quality_weights_from_similarities(sims, sigma));
      VectorX<double> qv(1), tv(1);
      qv << q;
      tv << target;
      return model::loss_mse(qv, tv);
    };
    const model::Vector5<double> w = model::quality_weights_from_similarities(s, sigma);
    const double dq = loss_of(s).grad(0);
    const model::Vector5<double> c = model::PromptSet<double>::anchors();
    const double q = w.dot(c);
    const VectorX<double> analytic = dq * (w.array() * (c.array() - q)).matrix() / sigma;
    const auto num = central_difference([&](const MatrixX<double>& x) {
      return loss_of(VectorX<double>(x)).value;
    }, s);
    return relative_error(analytic, num);
  }, rng));

  report.rows.push_back(check_loss("suggest", trials, [](SplitRandom& r) {
    const MatrixX2<double> logits = random_matrix(r, kN, 2, -3.0, 3.0);
    Eigen::VectorXi y(kN);
    for (Eigen::Index i = 0; i < kN; ++i) y(i) = r.uniform() < 0.5 ? 0 : 1;
    const auto res = model::loss_suggest(logits, y);
    const auto num = central_difference([&](const MatrixX<double>& x) {
      return model::loss_suggest(MatrixX2<double>(x), y).value;
    }, logits);
    return relative_error(res.grad, num);
  }, rng));

  report.rows.push_back(check_loss("cs", trials, [](SplitRandom& r) {
    const MatrixX2<double> t = random_pairs(r, kN);
    const MatrixX2<double> p = random_pairs(r, kN);
    const auto res = model::loss_cs(p, t);
    const auto num = central_difference([&](const MatrixX<double>& x) {
      return model::loss_cs(MatrixX2<double>(x), t).value;
    }, p);
    return relative_error(res.grad, num);
  }, rng));

  report.rows.push_back(check_loss("norm", trials, [](SplitRandom& r) {
    const MatrixX2<double> t = random_pairs(r, kN);
    const MatrixX2<double> p = random_pairs(r, kN);
    const auto res = model::loss_norm(p, t);
    const auto num = central_difference([&](const MatrixX<double>& x) {
      return model::loss_norm(MatrixX2<double>(x), t).value;
    }, p);
    return relative_error(res.grad, num);
  }, rng));

  // Mixed batch; masked rows must come out as exact zeros.
  GradcheckRow gated = make_row("cpam_total", trials);
  gated.max_rel_error = 0.0;
  bool masked_exact = true;
  for (int k = 0; k < trials; ++k) {
    model::AdjustmentBatch<double> b;
    b.y_s.resize(kN);
    for (Eigen::Index i = 0; i < kN; ++i) b.y_s(i) = i % 2 == 0 ? 1 : (rng.uniform() < 0.5 ? 0 : 1);
    b.suggest_logits = random_matrix(rng, kN, 2, -3.0, 3.0);
    b.pred_adjust = random_pairs(rng, kN);
    b.target_adjust = random_pairs(rng, kN);
    for (Eigen::Index i = 0; i < kN; ++i) {
      if (b.y_s(i) == 0) b.target_adjust.row(i).setZero();
    }
    const auto res = model::loss_cpam_total(b);
    const auto value_at = [&](const MatrixX<double>& logits, const MatrixX<double>& adjust) {
      auto copy = b;
      copy.suggest_logits = logits;
      copy.pred_adjust = adjust;
      return model::loss_cpam_total(copy).value;
    };
    const auto num_logits = central_difference(
        [&](const MatrixX<double>& x) { return value_at(x, b.pred_adjust); }, b.suggest_logits);
    const auto num_adjust = central_difference(
        [&](const MatrixX<double>& x) { return value_at(b.suggest_logits, x); }, b.pred_adjust);
    MatrixX<double> analytic(kN, 4), numeric(kN, 4);
    analytic << res.grad_logits, res.grad_adjust;
    numeric << num_logits, num_adjust;
    gated.max_rel_error = std::max(gated.max_rel_error, relative_error(analytic, numeric));
    for (Eigen::Index i = 0; i < kN; ++i) {
      if (b.y_s(i) == 0 && (res.grad_adjust(i, 0) != 0.0 || res.grad_adjust(i, 1) != 0.0 ||
                            std::signbit(res.grad_adjust(i, 0)) ||
                            std::signbit(res.grad_adjust(i, 1)))) {
        masked_exact = false;
      }
    }
  }
  gated.passed = gated.max_rel_error < kGradcheckTolerance;
  report.rows.push_back(gated);

  // Exact invariants.
  {
    GradcheckRow row = make_row("gating_zero", trials);
    row.passed = masked_exact;
    model::AdjustmentBatch<double> b;
    b.y_s = Eigen::VectorXi::Zero(kN);
    b.suggest_logits = random_matrix(rng, kN, 2, -3.0, 3.0);
    b.pred_adjust = random_pairs(rng, kN);
    b.target_adjust = MatrixX2<double>::Zero(kN, 2);
    const auto res = model::loss_cpam_total(b);
    const auto suggest = model::loss_suggest(b.suggest_logits, b.y_s);
    for (Eigen::Index i = 0; i < res.grad_adjust.size(); ++i) {
      if (res.grad_adjust(i) != 0.0 || std::signbit(res.grad_adjust(i))) row.passed = false;
    }
    if (res.value != suggest.value) row.passed = false;
    if (!row.passed) row.detail = "masked samples produced a nonzero adjustment gradient";
    report.rows.push_back(row);
  }
  {
    GradcheckRow row = make_row("uniform_q", 1);
    const model::Vector5<double> uniform = model::Vector5<double>::Constant(0.2);
    const model::Vector5<double> from_equal =
        model::quality_weights_from_similarities(model::Vector5<double>::Constant(0.3), 0.07);
    row.passed = model::weighted_score(uniform) == 3.0 && model::weighted_score(from_equal) == 3.0;
    if (!row.passed) row.detail = "uniform weights did not give q = 3";
    report.rows.push_back(row);
  }
  {
    GradcheckRow row = make_row("single_expert", trials);
    for (int k = 0; k < trials; ++k) {
      const Eigen::Index d = 4;
      model::GateConfig<double> cfg;
      cfg.task_gates.push_back({random_matrix(rng, 1, d, -1, 1), random_matrix(rng, 1, 1, -1, 1)});
      cfg.experts.push_back({random_matrix(rng, d, d, -1, 1), random_matrix(rng, d, 1, -1, 1)});
      const VectorX<double> x = random_matrix(rng, d, 1, -1, 1);
      const VectorX<double> g = model::gate_weights(x, cfg, 0);
      const MatrixX<double> e = model::expert_outputs(x, cfg);
      if (g(0) != 1.0 || model::moe_mix(g, e) != VectorX<double>(e.col(0))) row.passed = false;
    }
    if (!row.passed) row.detail = "single-expert mixing was not the identity";
    report.rows.push_back(row);
  }

  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void print_gradcheck(const GradcheckReport& report, std::ostream& out) {
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %7s %14s  %s\n", "check", "trials", "max_rel_err",
                "status");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-14s %7d %14.3e  %s%s%s\n", r.name.c_str(), r.trials,
                  r.max_rel_error, r.passed ? "ok" : "FAIL", r.detail.empty() ? "" : ": ",
                  r.detail.c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "tolerance %.0e, step %.0e, %.3f s, %s\n", kGradcheckTolerance,
                kGradcheckStep, report.seconds, report.passed() ? "all passed" : "FAILED");
  out << line;
}

}  // namespace pano
