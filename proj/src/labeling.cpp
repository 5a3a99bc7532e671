#include "pano/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace pano {

bool SceneRecord::fully_scored() const noexcept {
  if (!init_score) return false;
  return std::all_of(candidates.begin(), candidates.end(),
                     [](const CandidateView& c) { return c.score.has_value(); });
}

// ---------------------------------------------------------------------------
// Scorers

std::vector<double> HeuristicScorer::score_poses(const SceneRecord& scene,
                                                 std::span<const CameraPosed> poses) const {
  RgbImage erp;
  try {
    erp = load_image(scene.erp_path);
  } catch (const std::exception& e) {
    throw ScorerError("scene " + scene.scene_id + ": " + e.what());
  }
  std::vector<double> scores;
  scores.reserve(poses.size());
  for (const auto& pose : poses) {
    scores.push_back(heuristic_score(render_view(erp, pose, intrinsics_, scene.scene_id).image));
  }
  return scores;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

CsvScorer CsvScorer::from_string(const std::string& text) {
  CsvScorer scorer;
  std::stringstream in(text);
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    for (auto& c : cells) c = trim(c);
    if (!header_seen) {
      if (cells != std::vector<std::string>{"scene_id", "theta_deg", "phi_deg", "score"}) {
        throw std::runtime_error("score csv: expected header scene_id,theta_deg,phi_deg,score");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 4) {
      throw std::runtime_error("score csv line " + std::to_string(line_no) + ": expected 4 fields");
    }
    try {
      scorer.rows_[cells[0]].push_back(
          {{std::stod(cells[1]), std::stod(cells[2])}, std::stod(cells[3])});
    } catch (const std::logic_error&) {
      throw std::runtime_error("score csv line " + std::to_string(line_no) + ": bad number");
    }
  }
  if (!header_seen) throw std::runtime_error("score csv: empty file");
  return scorer;
}

CsvScorer CsvScorer::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open score csv " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

std::vector<double> CsvScorer::score_poses(const SceneRecord& scene,
                                           std::span<const CameraPosed> poses) const {
  const auto it = rows_.find(scene.scene_id);
  if (it == rows_.end()) throw ScorerError("scene " + scene.scene_id + ": no rows in score csv");
  std::vector<double> scores;
  scores.reserve(poses.size());
  for (const auto& pose : poses) {
    const auto row = std::find_if(it->second.begin(), it->second.end(),
                                  [&](const Row& r) { return same_pose(r.pose, pose, 1e-6); });
    if (row == it->second.end()) {
      std::ostringstream msg;
      msg << "scene " << scene.scene_id << ": no score for pose (" << pose.theta_deg << ", "
          << pose.phi_deg << ")";
      throw ScorerError(msg.str());
    }
    scores.push_back(row->score);
  }
  return scores;
}

std::vector<double> PoseFunctionScorer::score_poses(const SceneRecord& scene,
                                                    std::span<const CameraPosed> poses) const {
  std::vector<double> scores;
  scores.reserve(poses.size());
  for (const auto& pose : poses) scores.push_back(fn_(scene, pose));
  return scores;
}

PoseFunctionScorer planted_target_scorer(double d_theta_deg, double d_phi_deg) {
  return PoseFunctionScorer([=](const SceneRecord& scene, const CameraPosed& pose) {
    const SphericalDirectiond target{scene.init_pose.theta_deg + d_theta_deg,
                                     scene.init_pose.phi_deg + d_phi_deg};
    const Vector3d a = dir_to_vec(target);
    const Vector3d b = dir_to_vec(SphericalDirectiond{pose.theta_deg, pose.phi_deg});
    return -rad_to_deg(std::atan2(a.cross(b).norm(), a.dot(b)));
  });
}

PoseFunctionScorer constant_scorer(double value) {
  return PoseFunctionScorer([=](const SceneRecord&, const CameraPosed&) { return value; });
}

// ---------------------------------------------------------------------------
// Label rules

double adaptive_threshold(std::span<const double> scores, double top_fraction) {
  if (scores.empty()) throw std::invalid_argument("adaptive threshold needs at least one score");
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw std::invalid_argument("top fraction must lie in (0, 1]");
  }
  const auto m = static_cast<long>(scores.size());
  const long k = std::clamp(std::lround(top_fraction * static_cast<double>(m)), 1L, m);
  std::vector<double> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
  return sorted[static_cast<std::size_t>(k - 1)];
}

int suggestion_label(double init_score, double tau) noexcept { return init_score < tau ? 1 : 0; }

std::pair<double, double> adjustment_label(std::span<const CandidateView> candidates,
                                           const CameraPosed& init, int y_s) {
  if (y_s == 0) return {0.0, 0.0};
  if (candidates.empty()) throw std::invalid_argument("adjustment label needs candidates");
  const CandidateView* best = nullptr;
  double best_dt = 0.0, best_dp = 0.0;
  for (const auto& c : candidates) {
    if (!c.score) throw std::invalid_argument("adjustment label needs scored candidates");
    const double dt = signed_arc_deg(init.theta_deg, c.pose.theta_deg);
    const double dp = c.pose.phi_deg - init.phi_deg;
    const bool better =
        best == nullptr || *c.score > *best->score ||
        (*c.score == *best->score && std::hypot(dt, dp) < std::hypot(best_dt, best_dp));
    if (better) {
      best = &c;
      best_dt = dt;
      best_dp = dp;
    }
  }
  return {best_dt, best_dp};
}

SceneRecord label_scene(SceneRecord scene, const Scorer& scorer, double top_fraction,
                        bool rescore) {
  if (scene.candidates.empty()) {
    throw std::invalid_argument("scene " + scene.scene_id + " has no candidates to label against");
  }
  if (rescore || !scene.fully_scored()) {
    std::vector<CameraPosed> poses;
    poses.reserve(scene.candidates.size() + 1);
    poses.push_back(scene.init_pose);
    for (const auto& c : scene.candidates) poses.push_back(c.pose);
    const auto scores = scorer.score_poses(scene, poses);
    if (scores.size() != poses.size()) {
      throw ScorerError("scene " + scene.scene_id + ": scorer returned wrong number of scores");
    }
    for (double s : scores) {
      if (!std::isfinite(s)) throw ScorerError("scene " + scene.scene_id + ": non-finite score");
    }
    scene.init_score = scores[0];
    for (std::size_t i = 0; i < scene.candidates.size(); ++i) {
      scene.candidates[i].score = scores[i + 1];
    }
  }

  std::vector<double> cand_scores;
  cand_scores.reserve(scene.candidates.size());
  for (const auto& c : scene.candidates) cand_scores.push_back(*c.score);
  const double tau = adaptive_threshold(cand_scores, top_fraction);
  const int y_s = suggestion_label(*scene.init_score, tau);
  const auto [dt, dp] = adjustment_label(scene.candidates, scene.init_pose, y_s);
  scene.tau = tau;
  scene.labels = Labels{y_s, dt, dp};
  return scene;
}

// ---------------------------------------------------------------------------
// Heuristic composition score

double heuristic_score(const RgbImage& view) {
  const int w = view.width;
  const int h = view.height;
  if (w < 3 || h < 3) return 0.0;

  std::vector<double> lum(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* p = view.at(x, y);
      lum[static_cast<std::size_t>(y) * w + x] = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
    }
  }

  // Separable thirds weights: w(x, y) = max over the four intersections of
  // g(nx - cx) * g(ny - cy).
  constexpr double kSigma = 1.0 / 6.0;
  const auto bump = [](double d) { return std::exp(-d * d / (2.0 * kSigma * kSigma)); };
  std::vector<std::array<double, 2>> col_w(w), row_w(h);
  for (int x = 0; x < w; ++x) {
    const double nx = static_cast<double>(x) / (w - 1);
    col_w[x] = {bump(nx - 1.0 / 3.0), bump(nx - 2.0 / 3.0)};
  }
  for (int y = 0; y < h; ++y) {
    const double ny = static_cast<double>(y) / (h - 1);
    row_w[y] = {bump(ny - 1.0 / 3.0), bump(ny - 2.0 / 3.0)};
  }

  double weighted_energy = 0.0;
  double tilt_sin = 0.0;
  double tilt_cos = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    const double* row = lum.data() + static_cast<std::size_t>(y) * w;
    const double* up = row - w;
    const double* down = row + w;
    for (int x = 1; x < w - 1; ++x) {
      const double gx = 0.5 * (row[x + 1] - row[x - 1]);
      const double gy = 0.5 * (down[x] - up[x]);
      const double e = gx * gx + gy * gy;
      if (e == 0.0) continue;
      const double wt = std::max(std::max(col_w[x][0] * row_w[y][0], col_w[x][1] * row_w[y][0]),
                                 std::max(col_w[x][0] * row_w[y][1], col_w[x][1] * row_w[y][1]));
      weighted_energy += wt * e;
      if (std::abs(gy) > std::abs(gx) && e > 1e-4) {
        tilt_sin += 2.0 * gx * gy;
        tilt_cos += gy * gy - gx * gx;
      }
    }
  }
  const double interior = static_cast<double>(w - 2) * (h - 2);
  const double energy = 1000.0 * weighted_energy / interior;
  const double tilt = (tilt_sin == 0.0 && tilt_cos == 0.0) ? 0.0 : 0.5 * std::atan2(tilt_sin, tilt_cos);
  return energy - std::abs(tilt);
}

}  // namespace pano
