#pragma once

// JSONL persistence: scene manifests, prediction files and eval reports.
//
// A manifest is one optional header line {"manifest_header": {...}} followed
// by one scene object per line. Scene fields this tool does not know about
// are kept in SceneRecord::extra and written back after the known ones.

#include "pano/candidate_generation.hpp"
#include "pano/labeling.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pano {

using Json = nlohmann::ordered_json;

inline constexpr const char* kManifestHeaderKey = "manifest_header";

struct Manifest {
  Json header = Json::object();
  std::vector<SceneRecord> scenes;

  [[nodiscard]] SceneRecord* find(const std::string& scene_id);
  [[nodiscard]] const SceneRecord* find(const std::string& scene_id) const;
};

[[nodiscard]] Json scene_to_json(const SceneRecord& scene);
[[nodiscard]] SceneRecord scene_from_json(const Json& j);

[[nodiscard]] std::string serialize_manifest(const Manifest& m);
[[nodiscard]] Manifest parse_manifest(const std::string& text);
[[nodiscard]] Manifest read_manifest(const std::filesystem::path& path);
/// Atomic replace of `path`.
void write_manifest(const Manifest& m, const std::filesystem::path& path);

/// Sorts scenes by scene_id and rejects duplicates.
void sort_scenes(Manifest& m);

[[nodiscard]] Json generation_to_json(const GenerationConfig& cfg);
[[nodiscard]] GenerationConfig generation_from_json(const Json& j);

/// `erp_path` if absolute, otherwise relative to `base_dir`.
[[nodiscard]] std::filesystem::path resolve_erp_path(const SceneRecord& scene,
                                                     const std::filesystem::path& base_dir);

struct Prediction {
  std::string scene_id;
  double suggest_prob{0.0};
  double d_theta_deg{0.0};
  double d_phi_deg{0.0};
};

[[nodiscard]] std::vector<Prediction> parse_predictions(const std::string& text);
[[nodiscard]] std::vector<Prediction> read_predictions(const std::filesystem::path& path);
[[nodiscard]] std::string serialize_predictions(const std::vector<Prediction>& preds);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace pano
