#include "pano/commands.hpp"

#include "pano/gradcheck.hpp"
#include "pano/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

namespace pano {

namespace fs = std::filesystem;

namespace {

double round_tenth(double value) { return std::round(value * 10.0) / 10.0; }

fs::path base_dir_of(const fs::path& manifest) {
  const fs::path parent = manifest.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

Json tool_header(const Json& previous) {
  Json h = previous.is_object() ? previous : Json::object();
  h["tool"] = "pano-compose";
  return h;
}

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || !std::isfinite(v)) {
    throw std::invalid_argument("invalid " + what + " '" + text + "'");
  }
  return v;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::unique_ptr<Scorer> make_scorer(const std::string& spec, const CameraIntrinsicsd& render) {
  if (spec == "heuristic") return std::make_unique<HeuristicScorer>(render);
  if (spec.rfind("csv:", 0) == 0) {
    return std::make_unique<CsvScorer>(CsvScorer::from_file(spec.substr(4)));
  }
  if (spec.rfind("planted:", 0) == 0) {
    const std::string args = spec.substr(8);
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("planted scorer needs dtheta,dphi");
    return std::make_unique<PoseFunctionScorer>(
        planted_target_scorer(parse_double(args.substr(0, comma), "planted dtheta"),
                              parse_double(args.substr(comma + 1), "planted dphi")));
  }
  if (spec == "constant") return std::make_unique<PoseFunctionScorer>(constant_scorer(0.0));
  if (spec.rfind("constant:", 0) == 0) {
    return std::make_unique<PoseFunctionScorer>(
        constant_scorer(parse_double(spec.substr(9), "constant score")));
  }
  throw std::invalid_argument("unknown scorer '" + spec +
                              "' (expected heuristic, csv:<path>, planted:<dt>,<dp>, constant)");
}

// ---------------------------------------------------------------------------

int cmd_synth(const SynthOptions& opts, std::ostream& out) {
  if (opts.scenes <= 0) {
    if (opts.out.empty()) throw std::invalid_argument("synth needs --out");
    write_png(synth_erp(opts.width, opts.height, opts.pattern, opts.seed), opts.out);
    out << "wrote " << opts.out.string() << " (" << opts.width << "x" << opts.height << ", "
        << opts.pattern << ", seed " << opts.seed << ")\n";
    return 0;
  }
  if (opts.out_dir.empty() || opts.manifest.empty()) {
    throw std::invalid_argument("batch synth needs --out-dir and --manifest");
  }
  if (!(opts.max_init_pitch_deg >= 0.0 && opts.max_init_pitch_deg <= 90.0)) {
    throw std::invalid_argument("initial pitch bound must lie in [0, 90]");
  }
  fs::create_directories(opts.out_dir);
  const fs::path manifest_dir = fs::absolute(base_dir_of(opts.manifest));

  SplitRandom rng(opts.seed);
  Manifest m;
  m.header = tool_header(Json::object());
  m.header["synth"] = {{"width", opts.width},   {"height", opts.height},
                       {"pattern", opts.pattern}, {"seed", opts.seed},
                       {"scenes", opts.scenes}};
  std::vector<std::uint64_t> seeds(opts.scenes);
  for (int i = 0; i < opts.scenes; ++i) {
    SceneRecord s;
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d", i);
    s.scene_id = name;
    seeds[i] = rng.next_u64();
    const double theta = round_tenth(rng.uniform(-180.0, 180.0));
    s.init_pose = {wrap_degrees(theta),
                   round_tenth(rng.uniform(-opts.max_init_pitch_deg, opts.max_init_pitch_deg))};
    const fs::path erp = fs::absolute(opts.out_dir) / (s.scene_id + ".png");
    s.erp_path = fs::proximate(erp, manifest_dir).generic_string();
    s.extra["seed"] = seeds[i];
    m.scenes.push_back(std::move(s));
  }
  for (int i = 0; i < opts.scenes; ++i) {
    write_png(synth_erp(opts.width, opts.height, opts.pattern, seeds[i]),
              resolve_erp_path(m.scenes[i], manifest_dir));
  }
  write_manifest(m, opts.manifest);
  out << "wrote " << opts.scenes << " scenes to " << opts.manifest.string() << "\n";
  return 0;
}

int cmd_extract(const ExtractOptions& opts, std::ostream& out) {
  const auto pose = wrap_pose(opts.theta_deg, opts.phi_deg);
  if (!pose) throw std::invalid_argument("pitch must lie in [-90, 90] degrees");
  const auto k = intrinsics_from_fov(opts.fov_y_deg, opts.width, opts.height);
  if (opts.out.empty()) throw std::invalid_argument("extract needs --out");
  const RgbImage erp = load_image(opts.erp);
  const ViewImage view = render_view(erp, *pose, k, opts.erp.stem().string());
  write_png(view.image, opts.out);
  const SphericalRectd rect = view_rect_of(*pose, k);
  out << Json{{"theta_deg", rect.center.theta_deg},
              {"phi_deg", rect.center.phi_deg},
              {"alpha_deg", rect.alpha_deg},
              {"beta_deg", rect.beta_deg},
              {"width", k.width},
              {"height", k.height}}
             .dump()
      << "\n";
  return 0;
}

int cmd_candidates(const CandidatesOptions& opts, std::ostream& out) {
  opts.generation.validate();
  Manifest m = read_manifest(opts.in);
  sort_scenes(m);
  const fs::path base = base_dir_of(opts.in);

  parallel_for(m.scenes.size(), opts.jobs, [&](std::size_t i) {
    SceneRecord& s = m.scenes[i];
    s.error.reset();
    s.candidates.clear();
    s.labels.reset();
    s.tau.reset();
    s.init_score.reset();
    try {
      const fs::path erp = resolve_erp_path(s, base);
      if (!fs::is_regular_file(erp)) throw std::runtime_error("missing panorama " + erp.string());
      const auto init = wrap_pose(s.init_pose.theta_deg, s.init_pose.phi_deg);
      if (!init) throw std::runtime_error("initial pitch outside [-90, 90]");
      s.candidates = generate_candidates(*init, opts.generation);
    } catch (const std::exception& e) {
      s.error = e.what();
    }
  });

  m.header = tool_header(m.header);
  m.header["generation"] = generation_to_json(opts.generation);
  m.header.erase("labeling");
  write_manifest(m, opts.out);

  std::size_t failed = 0, total = 0;
  for (const auto& s : m.scenes) {
    if (s.error) {
      ++failed;
      out << "scene " << s.scene_id << ": error: " << *s.error << "\n";
    }
    total += s.candidates.size();
  }
  out << "scenes: " << m.scenes.size() - failed << " ok, " << failed << " failed\n";
  out << "candidates: " << total << " (lambda " << opts.generation.lambda << ", step "
      << opts.generation.step_theta_deg << "/" << opts.generation.step_phi_deg << " deg, m_max "
      << opts.generation.m_max << ")\n";
  return !m.scenes.empty() && failed == m.scenes.size() ? 1 : 0;
}

int cmd_label(const LabelOptions& opts, std::ostream& out) {
  if (!(opts.top_fraction > 0.0 && opts.top_fraction <= 1.0)) {
    throw std::invalid_argument("top fraction must lie in (0, 1]");
  }
  Manifest m = read_manifest(opts.in);
  sort_scenes(m);
  const fs::path base = base_dir_of(opts.in);
  double fov_y = kDefaultFovY;
  if (m.header.contains("generation")) fov_y = generation_from_json(m.header["generation"]).intrinsics.fov_y_deg;
  const auto scorer =
      make_scorer(opts.scorer, intrinsics_from_fov(fov_y, opts.score_width, opts.score_height));

  parallel_for(m.scenes.size(), opts.jobs, [&](std::size_t i) {
    SceneRecord& s = m.scenes[i];
    if (s.error) return;
    try {
      if (s.candidates.empty()) throw std::runtime_error("scene has no candidates");
      SceneRecord resolved = s;
      resolved.erp_path = resolve_erp_path(s, base).string();
      SceneRecord labeled = label_scene(std::move(resolved), *scorer, opts.top_fraction, opts.rescore);
      labeled.erp_path = s.erp_path;
      s = std::move(labeled);
    } catch (const std::exception& e) {
      s.error = e.what();
    }
  });

  m.header = tool_header(m.header);
  m.header["labeling"] = {{"scorer", opts.scorer},
                          {"n_frac", opts.top_fraction},
                          {"score_width", opts.score_width},
                          {"score_height", opts.score_height}};
  write_manifest(m, opts.out);

  // Summary: label balance and where the adjustments point.
  std::size_t labeled = 0, positive = 0, failed = 0;
  int max_ring = 0;
  std::map<std::pair<int, int>, int> histogram;  // (ring, neighbor) -> count
  for (const auto& s : m.scenes) {
    if (!s.labels) {
      ++failed;
      if (s.error) out << "scene " << s.scene_id << ": error: " << *s.error << "\n";
      continue;
    }
    ++labeled;
    for (const auto& c : s.candidates) max_ring = std::max(max_ring, c.ring);
    if (s.labels->y_s != 1) continue;
    ++positive;
    const CameraPosed target =
        apply_adjustment(s.init_pose, s.labels->d_theta_deg, s.labels->d_phi_deg);
    for (const auto& c : s.candidates) {
      if (same_pose(c.pose, target, 1e-6)) {
        ++histogram[{c.ring, c.neighbor}];
        break;
      }
    }
  }
  const auto pct = [&](std::size_t n) {
    return labeled == 0 ? std::string("-") : format_fixed(100.0 * n / labeled, 1) + "%";
  };
  out << "scenes: " << labeled << " labeled, " << failed << " failed\n";
  out << "n_frac: " << opts.top_fraction << "\n";
  out << "y_s=1: " << positive << " (" << pct(positive) << ")\n";
  out << "y_s=0: " << labeled - positive << " (" << pct(labeled - positive) << ")\n";
  out << "adjustments by ring (columns: UL U UR L R DL D DR)\n";
  for (int ring = 1; ring <= max_ring; ++ring) {
    out << "m=" << ring << ":";
    for (int nb = 0; nb < 8; ++nb) {
      const auto it = histogram.find({ring, nb});
      out << " " << (it == histogram.end() ? 0 : it->second);
    }
    out << "\n";
  }
  return labeled == 0 && !m.scenes.empty() ? 1 : 0;
}

Json evaluate(const Manifest& gt, const std::vector<Prediction>& preds, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("decision threshold must lie in [0, 1]");
  }
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.scene_id, &p).second) {
      throw std::runtime_error("duplicate prediction for scene " + p.scene_id);
    }
  }
  std::vector<std::string> missing_pred, missing_gt, unlabeled;
  std::vector<EvalRecord> records;
  std::vector<CameraPosed> inits;
  std::set<std::string> gt_ids;
  std::size_t skipped = 0;
  for (const auto& s : gt.scenes) {
    gt_ids.insert(s.scene_id);
    if (s.error) {
      ++skipped;
      continue;
    }
    if (!s.labels) {
      unlabeled.push_back(s.scene_id);
      continue;
    }
    const auto it = by_id.find(s.scene_id);
    if (it == by_id.end()) {
      missing_pred.push_back(s.scene_id);
      continue;
    }
    const Prediction& p = *it->second;
    records.push_back(make_eval_record(s.scene_id, *s.labels, p.suggest_prob, p.d_theta_deg,
                                       p.d_phi_deg, threshold));
    inits.push_back(s.init_pose);
  }
  for (const auto& p : preds) {
    if (!gt_ids.count(p.scene_id)) missing_gt.push_back(p.scene_id);
  }
  const auto join = [](const std::vector<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) s += (s.empty() ? "" : ",") + id;
    return s;
  };
  if (!unlabeled.empty()) throw std::runtime_error("unlabeled ground truth scenes: " + join(unlabeled));
  if (!missing_pred.empty() || !missing_gt.empty()) {
    std::string msg = "scene ids do not align;";
    if (!missing_pred.empty()) msg += " no prediction for: " + join(missing_pred) + ";";
    if (!missing_gt.empty()) msg += " no ground truth for: " + join(missing_gt) + ";";
    msg.pop_back();
    throw std::runtime_error(msg);
  }
  if (records.empty()) throw std::runtime_error("no scenes to evaluate");

  CameraIntrinsicsd k = default_intrinsics<double>();
  if (gt.header.contains("generation")) k = generation_from_json(gt.header.at("generation")).intrinsics;

  Json undefined = Json::object();
  const auto guarded = [&](const char* key, const std::function<double()>& fn) -> Json {
    try {
      return fn();
    } catch (const std::invalid_argument& e) {
      undefined[key] = e.what();
      return nullptr;
    }
  };

  std::vector<double> probs;
  std::vector<int> labels;
  std::vector<Vector2d> pred_adj, gt_adj;
  for (const auto& r : records) {
    probs.push_back(r.pred_suggest_prob);
    labels.push_back(r.gt.y_s);
    if (r.gt.y_s == 1) {
      pred_adj.emplace_back(r.pred_d_theta_deg, r.pred_d_phi_deg);
      gt_adj.emplace_back(r.gt.d_theta_deg, r.gt.d_phi_deg);
    }
  }
  const Confusion c = confusion_partition(records);

  Json report = Json::object();
  report["n"] = records.size();
  report["skipped_scenes"] = skipped;
  report["decision_threshold"] = threshold;
  report["auc"] = guarded("auc", [&] { return roc_auc(probs, labels); });
  report["cs"] = guarded("cs", [&] { return cs_metric(pred_adj, gt_adj); });
  report["mae_rad"] = guarded("mae_rad", [&] { return mae_metric(pred_adj, gt_adj); });
  report["sphiou_tp"] =
      guarded("sphiou_tp", [&] { return sph_iou_metric(records, inits, k, IouSubset::TruePositive); });
  report["sphiou_tp_fp"] =
      guarded("sphiou_tp_fp", [&] { return sph_iou_metric(records, inits, k, IouSubset::Predicted); });
  report["confusion"] = {{"tp", c.tp.size()}, {"fp", c.fp.size()}, {"tn", c.tn.size()}, {"fn", c.fn.size()}};
  report["units"] = {{"mae", "rad"}, {"angles", "deg"}};
  report["undefined"] = undefined;
  return report;
}

int cmd_eval(const EvalOptions& opts, std::ostream& out) {
  const Manifest gt = read_manifest(opts.manifest);
  const auto preds = read_predictions(opts.predictions);
  const Json report = evaluate(gt, preds, opts.threshold);
  const std::string text = report.dump(2) + "\n";
  if (!opts.report.empty()) write_text_atomic(opts.report, text);
  out << text;
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int trials, std::ostream& out) {
  const GradcheckReport report = run_gradcheck(seed, trials);
  print_gradcheck(report, out);
  return report.passed() ? 0 : 1;
}

}  // namespace pano
