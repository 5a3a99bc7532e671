#pragma once

// The batch commands behind the pano-compose CLI. Each returns a process exit
// code or throws std::exception on a fatal error; per-scene failures are
// recorded in the manifest instead.

#include "pano/candidate_generation.hpp"
#include "pano/labeling.hpp"
#include "pano/manifest.hpp"
#include "pano/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <string>

namespace pano {

inline constexpr int kDefaultScoreWidth = 512;
inline constexpr int kDefaultScoreHeight = 384;

struct SynthOptions {
  int width{2048};
  int height{1024};
  std::string pattern{"horizon"};
  std::uint64_t seed{0};
  std::filesystem::path out;  ///< single panorama
  // Batch mode (scenes > 0): out_dir/scene_NNN.png plus a manifest.
  int scenes{0};
  std::filesystem::path out_dir;
  std::filesystem::path manifest;
  double max_init_pitch_deg{15.0};
};

struct ExtractOptions {
  std::filesystem::path erp;
  double theta_deg{0.0};
  double phi_deg{0.0};
  double fov_y_deg{kDefaultFovY};
  int width{kDefaultViewWidth};
  int height{kDefaultViewHeight};
  std::filesystem::path out;
};

struct CandidatesOptions {
  std::filesystem::path in;
  std::filesystem::path out;
  GenerationConfig generation;
  int jobs{1};
};

struct LabelOptions {
  std::filesystem::path in;
  std::filesystem::path out;
  std::string scorer{"heuristic"};
  double top_fraction{kDefaultTopFraction};
  int score_width{kDefaultScoreWidth};
  int score_height{kDefaultScoreHeight};
  bool rescore{false};
  int jobs{1};
};

struct EvalOptions {
  std::filesystem::path predictions;
  std::filesystem::path manifest;
  std::filesystem::path report;  ///< empty: standard output only
  double threshold{kDefaultDecisionThreshold};
};

int cmd_synth(const SynthOptions& opts, std::ostream& out);
int cmd_extract(const ExtractOptions& opts, std::ostream& out);
int cmd_candidates(const CandidatesOptions& opts, std::ostream& out);
int cmd_label(const LabelOptions& opts, std::ostream& out);
int cmd_eval(const EvalOptions& opts, std::ostream& out);
int cmd_gradcheck(std::uint64_t seed, int trials, std::ostream& out);

/// heuristic | csv:<path> | planted:<dtheta>,<dphi> | constant[:<value>]
[[nodiscard]] std::unique_ptr<Scorer> make_scorer(const std::string& spec,
                                                  const CameraIntrinsicsd& render);

/// Eval report for manifest ground truth and predictions, as written by cmd_eval.
[[nodiscard]] Json evaluate(const Manifest& gt, const std::vector<Prediction>& preds,
                            double threshold);

/// Calls fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace pano
