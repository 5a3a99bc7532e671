#include "pano/manifest.hpp"

#include "pano/image.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pano {

namespace {

const char* const kKnownSceneKeys[] = {"scene_id", "erp_path",   "init_pose", "init_score",
                                       "candidates", "tau",      "labels",    "error"};

bool is_known_key(const std::string& key) {
  return std::find(std::begin(kKnownSceneKeys), std::end(kKnownSceneKeys), key) !=
         std::end(kKnownSceneKeys);
}

double get_number(const Json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw std::runtime_error(where + ": missing numeric field '" + key + "'");
  }
  return it->get<double>();
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    fn(j, line_no);
  }
}

}  // namespace

SceneRecord* Manifest::find(const std::string& scene_id) {
  for (auto& s : scenes) {
    if (s.scene_id == scene_id) return &s;
  }
  return nullptr;
}

const SceneRecord* Manifest::find(const std::string& scene_id) const {
  return const_cast<Manifest*>(this)->find(scene_id);
}

Json scene_to_json(const SceneRecord& s) {
  Json j = Json::object();
  j["scene_id"] = s.scene_id;
  j["erp_path"] = s.erp_path;
  j["init_pose"] = {{"theta_deg", s.init_pose.theta_deg}, {"phi_deg", s.init_pose.phi_deg}};
  if (s.init_score) j["init_score"] = *s.init_score;
  if (!s.candidates.empty()) {
    Json cands = Json::array();
    for (const auto& c : s.candidates) {
      Json cj = {{"theta_deg", c.pose.theta_deg},
                 {"phi_deg", c.pose.phi_deg},
                 {"m", c.ring},
                 {"neighbor", c.neighbor}};
      if (c.score) cj["score"] = *c.score;
      cands.push_back(std::move(cj));
    }
    j["candidates"] = std::move(cands);
  }
  if (s.tau) j["tau"] = *s.tau;
  if (s.labels) {
    j["labels"] = {{"y_s", s.labels->y_s},
                   {"d_theta_deg", s.labels->d_theta_deg},
                   {"d_phi_deg", s.labels->d_phi_deg}};
  }
  if (s.error) j["error"] = *s.error;
  for (const auto& [key, value] : s.extra.items()) {
    if (!j.contains(key)) j[key] = value;
  }
  return j;
}

SceneRecord scene_from_json(const Json& j) {
  if (!j.is_object()) throw std::runtime_error("scene entry must be a JSON object");
  SceneRecord s;
  const auto id = j.find("scene_id");
  if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw std::runtime_error("scene entry without a scene_id");
  }
  s.scene_id = id->get<std::string>();
  const std::string where = "scene " + s.scene_id;
  const auto erp = j.find("erp_path");
  if (erp == j.end() || !erp->is_string()) throw std::runtime_error(where + ": missing erp_path");
  s.erp_path = erp->get<std::string>();

  const auto pose = j.find("init_pose");
  if (pose == j.end() || !pose->is_object()) throw std::runtime_error(where + ": missing init_pose");
  s.init_pose = {get_number(*pose, "theta_deg", where), get_number(*pose, "phi_deg", where)};

  if (const auto it = j.find("init_score"); it != j.end() && !it->is_null()) {
    s.init_score = get_number(j, "init_score", where);
  }
  if (const auto it = j.find("candidates"); it != j.end()) {
    if (!it->is_array()) throw std::runtime_error(where + ": candidates must be an array");
    for (const auto& cj : *it) {
      CandidateView c;
      c.pose = {get_number(cj, "theta_deg", where), get_number(cj, "phi_deg", where)};
      c.ring = static_cast<int>(get_number(cj, "m", where));
      if (cj.contains("neighbor")) c.neighbor = static_cast<int>(get_number(cj, "neighbor", where));
      if (const auto sc = cj.find("score"); sc != cj.end() && !sc->is_null()) {
        c.score = get_number(cj, "score", where);
      }
      s.candidates.push_back(c);
    }
  }
  if (const auto it = j.find("tau"); it != j.end() && !it->is_null()) {
    s.tau = get_number(j, "tau", where);
  }
  if (const auto it = j.find("labels"); it != j.end() && !it->is_null()) {
    Labels l;
    l.y_s = static_cast<int>(get_number(*it, "y_s", where));
    if (l.y_s != 0 && l.y_s != 1) throw std::runtime_error(where + ": y_s must be 0 or 1");
    l.d_theta_deg = get_number(*it, "d_theta_deg", where);
    l.d_phi_deg = get_number(*it, "d_phi_deg", where);
    s.labels = l;
  }
  if (const auto it = j.find("error"); it != j.end() && !it->is_null()) {
    s.error = it->is_string() ? it->get<std::string>() : it->dump();
  }
  for (const auto& [key, value] : j.items()) {
    if (!is_known_key(key)) s.extra[key] = value;
  }
  return s;
}

std::string serialize_manifest(const Manifest& m) {
  std::string out;
  if (!m.header.empty()) {
    out += Json{{kManifestHeaderKey, m.header}}.dump();
    out += '\n';
  }
  for (const auto& s : m.scenes) {
    out += scene_to_json(s).dump();
    out += '\n';
  }
  return out;
}

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  for_each_line(text, [&](const Json& j, std::size_t line_no) {
    if (j.is_object() && j.size() == 1 && j.contains(kManifestHeaderKey)) {
      if (line_no != 1 && !m.scenes.empty()) {
        throw std::runtime_error("manifest header must precede all scenes");
      }
      m.header = j.at(kManifestHeaderKey);
      return;
    }
    try {
      m.scenes.push_back(scene_from_json(j));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return m;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Manifest read_manifest(const std::filesystem::path& path) {
  try {
    return parse_manifest(read_text(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  write_text_atomic(path, serialize_manifest(m));
}

void sort_scenes(Manifest& m) {
  std::stable_sort(m.scenes.begin(), m.scenes.end(),
                   [](const SceneRecord& a, const SceneRecord& b) { return a.scene_id < b.scene_id; });
  for (std::size_t i = 1; i < m.scenes.size(); ++i) {
    if (m.scenes[i].scene_id == m.scenes[i - 1].scene_id) {
      throw std::runtime_error("duplicate scene_id " + m.scenes[i].scene_id);
    }
  }
}

Json generation_to_json(const GenerationConfig& cfg) {
  return {{"step_theta_deg", cfg.step_theta_deg},
          {"step_phi_deg", cfg.step_phi_deg},
          {"m_max", cfg.m_max},
          {"lambda", cfg.lambda},
          {"test_mode", cfg.test_mode},
          {"fov_y_deg", cfg.intrinsics.fov_y_deg},
          {"width", cfg.intrinsics.width},
          {"height", cfg.intrinsics.height}};
}

GenerationConfig generation_from_json(const Json& j) {
  GenerationConfig cfg;
  const std::string where = "generation config";
  cfg.step_theta_deg = get_number(j, "step_theta_deg", where);
  cfg.step_phi_deg = get_number(j, "step_phi_deg", where);
  cfg.m_max = static_cast<int>(get_number(j, "m_max", where));
  cfg.lambda = get_number(j, "lambda", where);
  cfg.test_mode = j.value("test_mode", false);
  cfg.intrinsics =
      intrinsics_from_fov(get_number(j, "fov_y_deg", where), static_cast<int>(get_number(j, "width", where)),
                          static_cast<int>(get_number(j, "height", where)));
  return cfg;
}

std::filesystem::path resolve_erp_path(const SceneRecord& scene,
                                       const std::filesystem::path& base_dir) {
  const std::filesystem::path p(scene.erp_path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<Prediction> parse_predictions(const std::string& text) {
  std::vector<Prediction> out;
  for_each_line(text, [&](const Json& j, std::size_t line_no) {
    const std::string where = "prediction line " + std::to_string(line_no);
    if (!j.is_object() || !j.contains("scene_id") || !j["scene_id"].is_string()) {
      throw std::runtime_error(where + ": missing scene_id");
    }
    Prediction p;
    p.scene_id = j["scene_id"].get<std::string>();
    p.suggest_prob = get_number(j, "suggest_prob", where);
    if (!(p.suggest_prob >= 0.0 && p.suggest_prob <= 1.0)) {
      throw std::runtime_error(where + ": suggest_prob outside [0, 1]");
    }
    p.d_theta_deg = get_number(j, "d_theta_deg", where);
    p.d_phi_deg = get_number(j, "d_phi_deg", where);
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  try {
    return parse_predictions(read_text(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string serialize_predictions(const std::vector<Prediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    out += Json{{"scene_id", p.scene_id},
                {"suggest_prob", p.suggest_prob},
                {"d_theta_deg", p.d_theta_deg},
                {"d_phi_deg", p.d_phi_deg}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace pano
