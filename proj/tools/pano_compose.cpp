// pano-compose: panorama view extraction, candidate generation, pseudo-labeling,
// evaluation and the viewer backend.

#include "pano/commands.hpp"
#include "pano/server.hpp"
#include "pano/synth.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

// Errors go to stderr as a single "error: <reason>" line.
int fail(const std::string& reason, int code = 1) {
  std::string line = reason;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error: " << line << "\n";
  return code;
}

void add_generation_flags(CLI::App* cmd, pano::GenerationConfig& g, double& fov_y, double& step) {
  cmd->add_option("--fov-y", fov_y, "vertical field of view in degrees")->capture_default_str();
  cmd->add_option("--step-deg", step, "angular step between rings")->capture_default_str();
  cmd->add_option("--m-max", g.m_max, "number of rings")->capture_default_str();
  cmd->add_option("--lambda", g.lambda, "minimum overlap with the initial view")->capture_default_str();
  cmd->add_flag("--test-mode", g.test_mode, "allow lambda below 0.5");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composition-aware view selection on 360 degree panoramas"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  int jobs = 1;

  pano::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate procedural panoramas");
  synth_cmd->add_option("--width", synth.width)->capture_default_str();
  synth_cmd->add_option("--height", synth.height)->capture_default_str();
  synth_cmd->add_option("--pattern", synth.pattern)
      ->check(CLI::IsMember(pano::synth_patterns()))
      ->capture_default_str();
  synth_cmd->add_option("--seed", seed)->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "output PNG (single panorama)");
  synth_cmd->add_option("--scenes", synth.scenes, "number of scenes for batch mode");
  synth_cmd->add_option("--out-dir", synth.out_dir, "panorama directory (batch mode)");
  synth_cmd->add_option("--manifest", synth.manifest, "manifest to write (batch mode)");
  synth_cmd->add_option("--max-init-pitch", synth.max_init_pitch_deg)->capture_default_str();

  pano::ExtractOptions extract;
  auto* extract_cmd = app.add_subcommand("extract", "render a perspective view");
  extract_cmd->add_option("erp", extract.erp, "panorama (PNG or JPEG)")->required();
  extract_cmd->add_option("--theta", extract.theta_deg, "yaw in degrees")->capture_default_str();
  extract_cmd->add_option("--phi", extract.phi_deg, "pitch in degrees")->capture_default_str();
  extract_cmd->add_option("--fov-y", extract.fov_y_deg)->capture_default_str();
  extract_cmd->add_option("--width", extract.width)->capture_default_str();
  extract_cmd->add_option("--height", extract.height)->capture_default_str();
  extract_cmd->add_option("--out", extract.out, "output PNG")->required();

  pano::CandidatesOptions cands;
  double fov_y = pano::kDefaultFovY;
  double step = 5.0;
  auto* cand_cmd = app.add_subcommand("candidates", "generate candidate views");
  cand_cmd->add_option("--in", cands.in, "input manifest")->required();
  cand_cmd->add_option("--out", cands.out, "output manifest")->required();
  add_generation_flags(cand_cmd, cands.generation, fov_y, step);
  cand_cmd->add_option("--jobs", jobs)->capture_default_str();

  pano::LabelOptions label;
  auto* label_cmd = app.add_subcommand("label", "score candidates and derive labels");
  label_cmd->add_option("--in", label.in, "input manifest")->required();
  label_cmd->add_option("--out", label.out, "output manifest")->required();
  label_cmd->add_option("--scorer", label.scorer,
                        "heuristic | csv:<path> | planted:<dtheta>,<dphi> | constant[:<v>]")
      ->capture_default_str();
  label_cmd->add_option("--top-n", label.top_fraction, "top fraction of candidates for tau")
      ->capture_default_str();
  label_cmd->add_option("--score-width", label.score_width)->capture_default_str();
  label_cmd->add_option("--score-height", label.score_height)->capture_default_str();
  label_cmd->add_flag("--rescore", label.rescore, "ignore cached scores");
  label_cmd->add_option("--jobs", jobs)->capture_default_str();

  pano::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate predictions against labels");
  eval_cmd->add_option("--pred", eval.predictions, "prediction JSONL")->required();
  eval_cmd->add_option("--gt", eval.manifest, "labeled manifest")->required();
  eval_cmd->add_option("--report", eval.report, "report JSON to write");
  eval_cmd->add_option("--threshold", eval.threshold)->capture_default_str();

  int trials = 100;
  auto* grad_cmd = app.add_subcommand("gradcheck", "verify model gradients numerically");
  grad_cmd->add_option("--seed", seed)->capture_default_str();
  grad_cmd->add_option("--trials", trials)->capture_default_str();

  pano::ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP API for the viewer");
  serve_cmd->add_option("--manifest", serve.manifest)->required();
  serve_cmd->add_option("--data-dir", serve.data_dir);
  serve_cmd->add_option("--ratings", serve.ratings);
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.port)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(e.what(), 2);
  }

  try {
    if (*synth_cmd) {
      synth.seed = seed;
      return pano::cmd_synth(synth, std::cout);
    }
    if (*extract_cmd) return pano::cmd_extract(extract, std::cout);
    if (*cand_cmd) {
      if (!(step > 0.0)) return fail("--step-deg must be positive");
      cands.generation.step_theta_deg = step;
      cands.generation.step_phi_deg = step;
      cands.generation.intrinsics = pano::intrinsics_from_fov(
          fov_y, pano::kDefaultViewWidth, pano::kDefaultViewHeight);
      cands.jobs = jobs;
      return pano::cmd_candidates(cands, std::cout);
    }
    if (*label_cmd) {
      label.jobs = jobs;
      return pano::cmd_label(label, std::cout);
    }
    if (*eval_cmd) return pano::cmd_eval(eval, std::cout);
    if (*grad_cmd) return pano::cmd_gradcheck(seed, trials, std::cout);
    if (*serve_cmd) return pano::cmd_serve(serve);
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return fail("no command given", 2);
}
