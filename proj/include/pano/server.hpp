#pragma once

// HTTP API over a manifest: scene listing, panorama and rendered views,
// candidate / label inspection, initial-pose updates and A/B ratings.
//
//   GET  /api/scenes
//   GET  /api/scenes/{id}
//   GET  /api/scenes/{id}/erp.jpg
//   GET  /api/scenes/{id}/view?theta&phi&fovy&w&h      image/png
//   GET  /api/scenes/{id}/candidates
//   GET  /api/scenes/{id}/labels
//   POST /api/scenes/{id}/init   {theta_deg, phi_deg}
//   POST /api/ratings            {scene_id, left_ref, right_ref, choice}
//
// Manifest updates replace the file atomically; ratings are appended as one
// JSON line each. Writes are serialized, reads run concurrently.

#include <filesystem>
#include <memory>
#include <string>

namespace pano {

struct ServeOptions {
  std::filesystem::path manifest;
  std::filesystem::path data_dir;  ///< base for relative erp_path; default: manifest directory
  std::filesystem::path ratings;   ///< default: ratings.jsonl next to the manifest
  std::string host{"127.0.0.1"};
  int port{8080};                  ///< 0 picks a free port
};

class ApiServer {
 public:
  explicit ApiServer(ServeOptions opts);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds the listening socket and returns the port. Throws if binding fails.
  int bind();
  /// Serves until stop(); call bind() first.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int cmd_serve(const ServeOptions& opts);

}  // namespace pano
