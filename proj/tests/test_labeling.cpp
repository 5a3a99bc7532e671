#include "pano/labeling.hpp"
#include "pano/synth.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

using namespace pano;

namespace {

class FailingScorer final : public Scorer {
 public:
  std::vector<double> score_poses(const SceneRecord& scene, std::span<const CameraPosed>) const override {
    throw ScorerError("scene " + scene.scene_id + ": refused");
  }
};

SceneRecord scene_at(const CameraPosed& init, const GenerationConfig& cfg = {}) {
  SceneRecord s;
  s.scene_id = "s";
  s.init_pose = init;
  s.candidates = generate_candidates(init, cfg);
  return s;
}

CandidateView scored(double t, double p, double score) {
  return CandidateView{CameraPosed{t, p}, 1, 0, score};
}

}  // namespace

TEST(AdaptiveThreshold, Examples) {
  const std::vector<double> a = {9, 8, 7, 6};
  EXPECT_EQ(adaptive_threshold(a, 0.25), 9.0);
  const std::vector<double> b = {5, 5, 5};
  for (double f : {0.01, 0.25, 0.5, 1.0}) EXPECT_EQ(adaptive_threshold(b, f), 5.0);
  std::vector<double> c(100);
  std::iota(c.begin(), c.end(), 1.0);
  std::shuffle(c.begin(), c.end(), std::mt19937_64(3));
  EXPECT_EQ(adaptive_threshold(c, 0.25), 76.0);
  EXPECT_EQ(adaptive_threshold(c, 1.0), 1.0);
  EXPECT_EQ(adaptive_threshold(c, 0.001), 100.0);
}

TEST(AdaptiveThreshold, Errors) {
  EXPECT_THROW((void)adaptive_threshold(std::vector<double>{}, 0.25), std::invalid_argument);
  const std::vector<double> one = {1.0};
  EXPECT_THROW((void)adaptive_threshold(one, 0.0), std::invalid_argument);
  EXPECT_THROW((void)adaptive_threshold(one, 1.5), std::invalid_argument);
}

TEST(SuggestionLabel, Examples) {
  EXPECT_EQ(suggestion_label(8, 9), 1);
  EXPECT_EQ(suggestion_label(9, 9), 0);
  EXPECT_EQ(suggestion_label(10, 9), 0);
}

TEST(AdjustmentLabel, Examples) {
  const std::vector<CandidateView> a = {scored(5, -10, 3.0), scored(-5, 0, 1.0)};
  EXPECT_EQ(adjustment_label(a, CameraPosed{0, 0}, 0), std::make_pair(0.0, 0.0));
  EXPECT_EQ(adjustment_label(a, CameraPosed{0, 0}, 1), std::make_pair(5.0, -10.0));
  const std::vector<CandidateView> b = {scored(-175, 0, 1.0)};
  EXPECT_EQ(adjustment_label(b, CameraPosed{175, 0}, 1), std::make_pair(10.0, 0.0));
  const std::vector<CandidateView> half = {scored(-180, 0, 1.0)};
  EXPECT_EQ(adjustment_label(half, CameraPosed{0, 0}, 1).first, 180.0);
}

TEST(AdjustmentLabel, TiesPreferSmallestMoveThenOrder) {
  const std::vector<CandidateView> c = {scored(10, 0, 2.0), scored(0, 5, 2.0), scored(-5, 0, 2.0),
                                        scored(1, 1, 1.0)};
  EXPECT_EQ(adjustment_label(c, CameraPosed{0, 0}, 1), std::make_pair(0.0, 5.0));
  const std::vector<CandidateView> d = {scored(10, 0, 2.0), scored(-10, 0, 2.0)};
  EXPECT_EQ(adjustment_label(d, CameraPosed{0, 0}, 1), std::make_pair(10.0, 0.0));
}

TEST(AdjustmentLabel, Errors) {
  EXPECT_THROW((void)adjustment_label({}, CameraPosed{0, 0}, 1), std::invalid_argument);
  const std::vector<CandidateView> unscored = {CandidateView{CameraPosed{5, 0}, 1, 4, std::nullopt}};
  EXPECT_THROW((void)adjustment_label(unscored, CameraPosed{0, 0}, 1), std::invalid_argument);
}

TEST(LabelScene, ConstantScorerGivesNoSuggestion) {
  const auto out = label_scene(scene_at(CameraPosed{12, 3}), constant_scorer(4.5), 0.25);
  ASSERT_TRUE(out.labels.has_value());
  EXPECT_EQ(*out.tau, 4.5);
  EXPECT_EQ(*out.init_score, 4.5);
  EXPECT_EQ(*out.labels, (Labels{0, 0.0, 0.0}));
  for (const auto& c : out.candidates) EXPECT_EQ(c.score, 4.5);
}

TEST(LabelScene, PlantedTargetIsFound) {
  for (const auto& [dt, dp] : std::vector<std::pair<double, double>>{{10, -10}, {-20, 0}, {0, 15}, {-20, -20}, {15, 15}}) {
    for (const CameraPosed init : {CameraPosed{0, 0}, CameraPosed{178, 20}, CameraPosed{-90, -40}}) {
      const auto out = label_scene(scene_at(init), planted_target_scorer(dt, dp), 0.25);
      ASSERT_TRUE(out.labels.has_value());
      EXPECT_EQ(out.labels->y_s, 1);
      EXPECT_NEAR(out.labels->d_theta_deg, dt, 1e-9);
      EXPECT_NEAR(out.labels->d_phi_deg, dp, 1e-9);
    }
  }
}

TEST(LabelScene, CsvScorerMatchesPoseFunction) {
  SceneRecord scene = scene_at(CameraPosed{170, 10});
  scene.scene_id = "room";
  std::string csv = "scene_id,theta_deg,phi_deg,score\n";
  const auto fn = [](const CameraPosed& p) { return std::sin(p.theta_deg / 7.0) + p.phi_deg / 100.0; };
  char line[128];
  std::snprintf(line, sizeof line, "room,%.17g,%.17g,%.17g\n", scene.init_pose.theta_deg + 360.0,
                scene.init_pose.phi_deg, fn(scene.init_pose));
  csv += line;
  for (const auto& c : scene.candidates) {
    std::snprintf(line, sizeof line, "room, %.12f ,%.12f,%.17g\n", c.pose.theta_deg, c.pose.phi_deg, fn(c.pose));
    csv += line;
  }
  const auto a = label_scene(scene, CsvScorer::from_string(csv), 0.25);
  const auto b = label_scene(scene, PoseFunctionScorer([&](const SceneRecord&, const CameraPosed& p) { return fn(p); }), 0.25);
  EXPECT_EQ(*a.labels, *b.labels);
  EXPECT_EQ(*a.tau, *b.tau);

  SceneRecord other = scene;
  other.scene_id = "missing";
  EXPECT_THROW((void)label_scene(other, CsvScorer::from_string(csv), 0.25), ScorerError);
  SceneRecord moved = scene;
  moved.candidates.front().pose.theta_deg += 1e-3;
  EXPECT_THROW((void)label_scene(moved, CsvScorer::from_string(csv), 0.25), ScorerError);
  EXPECT_THROW((void)CsvScorer::from_string("a,b,c\n"), std::runtime_error);
  EXPECT_THROW((void)CsvScorer::from_string("scene_id,theta_deg,phi_deg,score\nx,1,2\n"), std::runtime_error);
  EXPECT_THROW((void)CsvScorer::from_string("scene_id,theta_deg,phi_deg,score\nx,1,two,3\n"), std::runtime_error);
}

TEST(LabelScene, CachedScoresSkipScorer) {
  const auto first = label_scene(scene_at(CameraPosed{0, 0}), planted_target_scorer(10, 0), 0.25);
  const auto again = label_scene(first, FailingScorer{}, 0.25);
  EXPECT_EQ(*again.labels, *first.labels);
  EXPECT_THROW((void)label_scene(first, FailingScorer{}, 0.25, true), ScorerError);
}

TEST(LabelScene, ScorerFailuresAbort) {
  EXPECT_THROW((void)label_scene(scene_at(CameraPosed{0, 0}), FailingScorer{}, 0.25), ScorerError);
  const PoseFunctionScorer nan_scorer([](const SceneRecord&, const CameraPosed&) { return std::nan(""); });
  EXPECT_THROW((void)label_scene(scene_at(CameraPosed{0, 0}), nan_scorer, 0.25), ScorerError);
  SceneRecord empty;
  empty.scene_id = "e";
  EXPECT_THROW((void)label_scene(empty, constant_scorer(1), 0.25), std::invalid_argument);
  SceneRecord no_file = scene_at(CameraPosed{0, 0});
  no_file.erp_path = "/nonexistent/pano.png";
  EXPECT_THROW((void)label_scene(no_file, HeuristicScorer{}, 0.25), ScorerError);
}

TEST(LabelScene, MatchesBruteForceOnRandomScores) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> th(-180, 180), ph(-80, 80), lam(0.5, 0.9);
  std::uniform_int_distribution<int> level(0, 12);
  for (int trial = 0; trial < 300; ++trial) {
    GenerationConfig cfg;
    cfg.lambda = lam(rng);
    SceneRecord scene = scene_at(CameraPosed{th(rng), ph(rng)}, cfg);
    if (scene.candidates.empty()) continue;
    // Coarse score levels make ties common.
    scene.init_score = level(rng) / 4.0;
    std::vector<double> scores;
    std::vector<CameraPosed> poses;
    for (auto& c : scene.candidates) {
      c.score = level(rng) / 4.0;
      scores.push_back(*c.score);
      poses.push_back(c.pose);
    }
    const double frac = trial % 3 == 0 ? 0.25 : (trial % 3 == 1 ? 0.1 : 0.6);
    const auto out = label_scene(scene, FailingScorer{}, frac);
    const auto ref = oracle::brute_labels(scene.init_pose, *scene.init_score, poses, scores, frac);
    EXPECT_EQ(*out.tau, ref.tau);
    EXPECT_EQ(out.labels->y_s, ref.y_s);
    EXPECT_EQ(out.labels->d_theta_deg, ref.d_theta);
    EXPECT_EQ(out.labels->d_phi_deg, ref.d_phi);
    EXPECT_NE(std::find(scores.begin(), scores.end(), *out.tau), scores.end());
    if (out.labels->y_s == 1) {
      EXPECT_TRUE(out.labels->d_theta_deg != 0.0 || out.labels->d_phi_deg != 0.0);
    } else {
      EXPECT_EQ(*out.labels, (Labels{0, 0.0, 0.0}));
    }
    EXPECT_GT(out.labels->d_theta_deg, -180.0);
    EXPECT_LE(out.labels->d_theta_deg, 180.0);
  }
}

TEST(LabelScene, ShiftAndScaleInvariance) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> level(-40, 40);
  for (int trial = 0; trial < 100; ++trial) {
    SceneRecord scene = scene_at(CameraPosed{trial * 3.7 - 180.0, (trial % 11) * 5.0 - 25.0});
    scene.init_score = level(rng) / 1024.0;
    for (auto& c : scene.candidates) c.score = level(rng) / 1024.0;
    const auto base = label_scene(scene, FailingScorer{}, 0.25);
    for (const auto& [shift, scale] : std::vector<std::pair<double, double>>{{3.0, 1.0}, {-1.5, 1.0}, {0.0, 8.0}, {2.0, 0.5}}) {
      SceneRecord moved = scene;
      moved.init_score = *scene.init_score * scale + shift;
      for (auto& c : moved.candidates) c.score = *c.score * scale + shift;
      EXPECT_EQ(*label_scene(moved, FailingScorer{}, 0.25).labels, *base.labels);
    }
  }
}

TEST(HeuristicScore, BasicProperties) {
  EXPECT_EQ(heuristic_score(RgbImage(64, 48, 128)), 0.0);
  EXPECT_EQ(heuristic_score(RgbImage(2, 2, 128)), 0.0);
  const RgbImage erp = synth_erp(512, 256, "horizon", 1);
  const auto view = render_view(erp, CameraPosed{0, 0}, intrinsics_from_fov(60.0, 128, 96)).image;
  EXPECT_EQ(heuristic_score(view), heuristic_score(RgbImage(view)));
}

TEST(HeuristicScore, MirrorSymmetric) {
  RgbImage tilted(120, 90), mirrored(120, 90);
  for (int y = 0; y < 90; ++y) {
    for (int x = 0; x < 120; ++x) {
      const std::uint8_t v = (y - 30) < (x - 60) * 0.3 ? 220 : 40;
      std::fill(tilted.at(x, y), tilted.at(x, y) + 3, v);
      std::fill(mirrored.at(119 - x, y), mirrored.at(119 - x, y) + 3, v);
    }
  }
  EXPECT_NEAR(heuristic_score(tilted), heuristic_score(mirrored), 1e-9);
}

TEST(HeuristicScore, GoldenViews) {
  const std::filesystem::path dir = PANO_TEST_DATA;
  EXPECT_EQ(heuristic_score(load_image(dir / "view_horizon.png")), 0.43895592004537021);
  EXPECT_EQ(heuristic_score(load_image(dir / "view_checker.png")), 10.445606786850604);
  EXPECT_EQ(heuristic_score(load_image(dir / "view_direction.png")), 7.8491372988598371);
}
