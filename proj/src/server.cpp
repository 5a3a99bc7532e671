#include "pano/server.hpp"

#include "pano/manifest.hpp"
#include "pano/metrics.hpp"

#include <httplib.h>

#include <fstream>
#include <iostream>
#include <list>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>

namespace pano {

namespace fs = std::filesystem;

namespace {

constexpr int kMaxViewSide = 4096;
constexpr std::size_t kErpCacheSize = 4;

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, {{"error", message}}, status);
}

double query_number(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string text = req.get_param_value(key);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("invalid query parameter ") + key);
  }
  return v;
}

int query_int(const httplib::Request& req, const char* key, int fallback) {
  const double v = query_number(req, key, fallback);
  if (v != std::floor(v) || v < 2 || v > kMaxViewSide) {
    throw std::invalid_argument(std::string(key) + " must be an integer in [2, 4096]");
  }
  return static_cast<int>(v);
}

}  // namespace

struct ApiServer::Impl {
  ServeOptions opts;
  httplib::Server http;
  Manifest manifest;
  std::shared_mutex manifest_mutex;
  std::mutex ratings_mutex;
  std::mutex cache_mutex;
  std::list<std::pair<std::string, std::shared_ptr<const RgbImage>>> erp_cache;
  int port{-1};

  explicit Impl(ServeOptions o) : opts(std::move(o)) {
    manifest = read_manifest(opts.manifest);
    sort_scenes(manifest);
    if (opts.data_dir.empty()) {
      opts.data_dir = opts.manifest.parent_path().empty() ? fs::path(".") : opts.manifest.parent_path();
    }
    if (opts.ratings.empty()) opts.ratings = opts.data_dir / "ratings.jsonl";
    routes();
  }

  std::optional<SceneRecord> scene(const std::string& id) {
    std::shared_lock lock(manifest_mutex);
    const SceneRecord* s = manifest.find(id);
    if (!s) return std::nullopt;
    return *s;
  }

  std::shared_ptr<const RgbImage> erp(const SceneRecord& s) {
    const std::string path = resolve_erp_path(s, opts.data_dir).string();
    {
      std::lock_guard lock(cache_mutex);
      for (auto it = erp_cache.begin(); it != erp_cache.end(); ++it) {
        if (it->first == path) {
          erp_cache.splice(erp_cache.begin(), erp_cache, it);
          return it->second;
        }
      }
    }
    auto image = std::make_shared<const RgbImage>(load_image(path));
    std::lock_guard lock(cache_mutex);
    erp_cache.emplace_front(path, image);
    if (erp_cache.size() > kErpCacheSize) erp_cache.pop_back();
    return image;
  }

  // Wraps a scene-scoped handler with lookup and error mapping.
  template <typename Fn>
  httplib::Server::Handler scene_route(Fn fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      try {
        const auto s = scene(id);
        if (!s) return send_error(res, 404, "unknown scene " + id);
        fn(*s, req, res);
      } catch (const std::invalid_argument& e) {
        send_error(res, 400, e.what());
      } catch (const Json::exception& e) {
        send_error(res, 400, std::string("invalid JSON: ") + e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  }

  void routes() {
    http.Get("/api/scenes", [this](const httplib::Request&, httplib::Response& res) {
      Json list = Json::array();
      std::shared_lock lock(manifest_mutex);
      for (const auto& s : manifest.scenes) {
        list.push_back({{"scene_id", s.scene_id},
                        {"init_pose", {{"theta_deg", s.init_pose.theta_deg},
                                       {"phi_deg", s.init_pose.phi_deg}}},
                        {"labeled", s.labels.has_value()}});
      }
      send_json(res, {{"scenes", list}});
    });

    http.Get(R"(/api/scenes/([^/]+))",
             scene_route([](const SceneRecord& s, const httplib::Request&, httplib::Response& res) {
               send_json(res, scene_to_json(s));
             }));

    http.Get(R"(/api/scenes/([^/]+)/candidates)",
             scene_route([](const SceneRecord& s, const httplib::Request&, httplib::Response& res) {
               const Json j = scene_to_json(s);
               send_json(res, {{"scene_id", s.scene_id},
                               {"init_pose", j["init_pose"]},
                               {"init_score", s.init_score ? Json(*s.init_score) : Json(nullptr)},
                               {"candidates", j.value("candidates", Json::array())}});
             }));

    http.Get(R"(/api/scenes/([^/]+)/labels)",
             scene_route([](const SceneRecord& s, const httplib::Request&, httplib::Response& res) {
               if (!s.labels) return send_error(res, 404, "scene " + s.scene_id + " is not labeled");
               const Json j = scene_to_json(s);
               send_json(res, {{"scene_id", s.scene_id},
                               {"labels", j["labels"]},
                               {"tau", s.tau ? Json(*s.tau) : Json(nullptr)}});
             }));

    http.Get(R"(/api/scenes/([^/]+)/erp\.jpg)",
             scene_route([this](const SceneRecord& s, const httplib::Request&, httplib::Response& res) {
               const auto bytes = read_file_bytes(resolve_erp_path(s, opts.data_dir));
               if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8) {
                 res.set_content(std::string(bytes.begin(), bytes.end()), "image/jpeg");
               } else {
                 const auto jpeg = encode_jpeg(decode_image(bytes));
                 res.set_content(std::string(jpeg.begin(), jpeg.end()), "image/jpeg");
               }
             }));

    http.Get(R"(/api/scenes/([^/]+)/view)",
             scene_route([this](const SceneRecord& s, const httplib::Request& req, httplib::Response& res) {
               const auto pose = wrap_pose(query_number(req, "theta", s.init_pose.theta_deg),
                                           query_number(req, "phi", s.init_pose.phi_deg));
               if (!pose) throw std::invalid_argument("phi must lie in [-90, 90]");
               const auto k = intrinsics_from_fov(query_number(req, "fovy", kDefaultFovY),
                                                  query_int(req, "w", kDefaultViewWidth),
                                                  query_int(req, "h", kDefaultViewHeight));
               const ViewImage view = render_view(*erp(s), *pose, k, s.scene_id);
               const auto png = encode_png(view.image);
               res.set_header("X-Pose-Theta", std::to_string(pose->theta_deg));
               res.set_header("X-Pose-Phi", std::to_string(pose->phi_deg));
               res.set_content(std::string(png.begin(), png.end()), "image/png");
             }));

    http.Post(R"(/api/scenes/([^/]+)/init)",
              scene_route([this](const SceneRecord& s, const httplib::Request& req, httplib::Response& res) {
                const Json body = Json::parse(req.body);
                if (!body.is_object() || !body.contains("theta_deg") || !body.contains("phi_deg") ||
                    !body["theta_deg"].is_number() || !body["phi_deg"].is_number()) {
                  throw std::invalid_argument("body must be {theta_deg, phi_deg}");
                }
                const auto pose = wrap_pose(body["theta_deg"].get<double>(), body["phi_deg"].get<double>());
                if (!pose) throw std::invalid_argument("phi_deg must lie in [-90, 90]");
                std::unique_lock lock(manifest_mutex);
                SceneRecord* target = manifest.find(s.scene_id);
                if (!target) return send_error(res, 404, "unknown scene " + s.scene_id);
                if (!same_pose(target->init_pose, *pose, 0.0)) {
                  // Derived data belongs to the old pose.
                  target->init_pose = *pose;
                  target->candidates.clear();
                  target->labels.reset();
                  target->tau.reset();
                  target->init_score.reset();
                }
                write_manifest(manifest, opts.manifest);
                send_json(res, scene_to_json(*target));
              }));

    http.Post("/api/ratings", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const Json body = Json::parse(req.body);
        if (!body.is_object()) throw std::invalid_argument("body must be a JSON object");
        for (const char* key : {"scene_id", "left_ref", "right_ref", "choice"}) {
          if (!body.contains(key) || body[key].is_null()) {
            throw std::invalid_argument(std::string("missing field ") + key);
          }
        }
        const std::string choice = body["choice"].is_string() ? body["choice"].get<std::string>() : "";
        if (choice != "left" && choice != "right" && choice != "same") {
          throw std::invalid_argument("choice must be left, right or same");
        }
        const std::string id = body["scene_id"].is_string() ? body["scene_id"].get<std::string>() : "";
        if (!scene(id)) return send_error(res, 404, "unknown scene " + id);
        const Json row = {{"scene_id", id},
                          {"left_ref", body["left_ref"]},
                          {"right_ref", body["right_ref"]},
                          {"choice", choice}};
        std::lock_guard lock(ratings_mutex);
        std::ofstream out(opts.ratings, std::ios::app | std::ios::binary);
        out << row.dump() << '\n';
        out.flush();
        if (!out) throw std::runtime_error("cannot append to " + opts.ratings.string());
        send_json(res, row, 201);
      } catch (const Json::exception& e) {
        send_error(res, 400, std::string("invalid JSON: ") + e.what());
      } catch (const std::invalid_argument& e) {
        send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    });
  }
};

ApiServer::ApiServer(ServeOptions opts) : impl_(std::make_unique<Impl>(std::move(opts))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
  if (impl_->opts.port == 0) {
    impl_->port = impl_->http.bind_to_any_port(impl_->opts.host);
  } else if (impl_->http.bind_to_port(impl_->opts.host, impl_->opts.port)) {
    impl_->port = impl_->opts.port;
  }
  if (impl_->port < 0) {
    throw std::runtime_error("cannot listen on " + impl_->opts.host + ":" +
                             std::to_string(impl_->opts.port) + " (port in use?)");
  }
  return impl_->port;
}

void ApiServer::run() { impl_->http.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

int cmd_serve(const ServeOptions& opts) {
  ApiServer server(opts);
  const int port = server.bind();
  std::cout << "listening on http://" << opts.host << ":" << port << "\n" << std::flush;
  server.run();
  return 0;
}

}  // namespace pano
