#include "pano/commands.hpp"
#include "pano/server.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <filesystem>
#include <sstream>
#include <thread>

using namespace pano;
namespace fs = std::filesystem;

namespace {

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pano_srv_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    SynthOptions so;
    so.width = 256;
    so.height = 128;
    so.scenes = 2;
    so.seed = 3;
    so.out_dir = dir_ / "erp";
    so.manifest = dir_ / "scenes.jsonl";
    std::ostringstream sink;
    ASSERT_EQ(cmd_synth(so, sink), 0);
    ASSERT_EQ(cmd_candidates({so.manifest, dir_ / "c.jsonl", GenerationConfig{}, 1}, sink), 0);
    LabelOptions lo;
    lo.in = dir_ / "c.jsonl";
    lo.out = dir_ / "m.jsonl";
    lo.scorer = "planted:-20,-20";
    ASSERT_EQ(cmd_label(lo, sink), 0);
    // Second scene stays unlabeled.
    Manifest m = read_manifest(lo.out);
    m.scenes[1].labels.reset();
    m.scenes[1].tau.reset();
    write_manifest(m, lo.out);
    manifest_ = lo.out;
    start();
  }

  void start() {
    ServeOptions opts;
    opts.manifest = manifest_;
    opts.port = 0;
    server_ = std::make_unique<ApiServer>(opts);
    port_ = server_->bind();
    thread_ = std::thread([this] { server_->run(); });
  }

  void stop() {
    server_->stop();
    thread_.join();
    server_.reset();
  }

  void TearDown() override {
    if (server_) stop();
    fs::remove_all(dir_);
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

  fs::path dir_, manifest_;
  std::unique_ptr<ApiServer> server_;
  std::thread thread_;
  int port_{0};
};

Json body_of(const httplib::Result& r) { return Json::parse(r->body); }

}  // namespace

TEST_F(ServerTest, ListsAndShowsScenes) {
  auto cli = client();
  const auto r = cli.Get("/api/scenes");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const Json list = body_of(r)["scenes"];
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0]["scene_id"], "scene_000");
  EXPECT_TRUE(list[0]["labeled"].get<bool>());
  EXPECT_FALSE(list[1]["labeled"].get<bool>());

  const auto one = cli.Get("/api/scenes/scene_000");
  ASSERT_TRUE(one);
  EXPECT_EQ(body_of(one), scene_to_json(read_manifest(manifest_).scenes[0]));
  const auto missing = cli.Get("/api/scenes/nope");
  EXPECT_EQ(missing->status, 404);
  EXPECT_TRUE(body_of(missing).contains("error"));
}

TEST_F(ServerTest, CandidatesMatchManifestScores) {
  auto cli = client();
  const auto r = cli.Get("/api/scenes/scene_000/candidates");
  ASSERT_EQ(r->status, 200);
  const Json j = body_of(r);
  const SceneRecord s = read_manifest(manifest_).scenes[0];
  ASSERT_EQ(j["candidates"].size(), s.candidates.size());
  for (std::size_t i = 0; i < s.candidates.size(); ++i) {
    EXPECT_EQ(j["candidates"][i]["score"].get<double>(), *s.candidates[i].score);
    EXPECT_EQ(j["candidates"][i]["theta_deg"].get<double>(), s.candidates[i].pose.theta_deg);
  }
  EXPECT_EQ(j["init_score"].get<double>(), *s.init_score);
}

TEST_F(ServerTest, Labels) {
  auto cli = client();
  const auto r = cli.Get("/api/scenes/scene_000/labels");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(body_of(r)["labels"]["y_s"], 1);
  EXPECT_EQ(body_of(r)["labels"]["d_theta_deg"].get<double>(), -20.0);
  EXPECT_EQ(cli.Get("/api/scenes/scene_001/labels")->status, 404);
}

TEST_F(ServerTest, ErpAsJpeg) {
  auto cli = client();
  const auto r = cli.Get("/api/scenes/scene_000/erp.jpg");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/jpeg");
  const std::vector<std::uint8_t> bytes(r->body.begin(), r->body.end());
  const RgbImage img = decode_image(bytes);
  EXPECT_EQ(img.width, 256);
  EXPECT_EQ(img.height, 128);
}

TEST_F(ServerTest, ViewMatchesExtract) {
  auto cli = client();
  const auto r = cli.Get("/api/scenes/scene_000/view?theta=190&phi=-12.5&fovy=70&w=160&h=120");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(std::stod(r->get_header_value("X-Pose-Theta")), -170.0);
  ExtractOptions eo;
  eo.erp = dir_ / "erp" / "scene_000.png";
  eo.theta_deg = 190;
  eo.phi_deg = -12.5;
  eo.fov_y_deg = 70;
  eo.width = 160;
  eo.height = 120;
  eo.out = dir_ / "extract.png";
  std::ostringstream sink;
  ASSERT_EQ(cmd_extract(eo, sink), 0);
  EXPECT_EQ(r->body, read_text(eo.out));

  const auto dflt = cli.Get("/api/scenes/scene_000/view");
  ASSERT_EQ(dflt->status, 200);
  const RgbImage v = decode_image(std::vector<std::uint8_t>(dflt->body.begin(), dflt->body.end()));
  EXPECT_EQ(v.width, 1024);
  EXPECT_EQ(v.height, 768);

  EXPECT_EQ(cli.Get("/api/scenes/scene_000/view?phi=95")->status, 400);
  EXPECT_EQ(cli.Get("/api/scenes/scene_000/view?w=abc")->status, 400);
  EXPECT_EQ(cli.Get("/api/scenes/scene_000/view?w=100000")->status, 400);
  EXPECT_EQ(cli.Get("/api/scenes/scene_000/view?fovy=0")->status, 400);
}

TEST_F(ServerTest, InitPosePersistsAndSurvivesRestart) {
  auto cli = client();
  const auto r = cli.Post("/api/scenes/scene_001/init", R"({"theta_deg": 12.3, "phi_deg": -4.5})", "application/json");
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(body_of(r)["init_pose"]["theta_deg"].get<double>(), 12.3);
  EXPECT_FALSE(body_of(r).contains("candidates"));
  const SceneRecord saved = *read_manifest(manifest_).find("scene_001");
  EXPECT_NEAR(saved.init_pose.theta_deg, 12.3, 0.05);
  EXPECT_NEAR(saved.init_pose.phi_deg, -4.5, 0.05);

  stop();
  start();
  auto again = client();
  const Json s = body_of(again.Get("/api/scenes/scene_001"));
  EXPECT_EQ(s["init_pose"]["theta_deg"].get<double>(), 12.3);
  EXPECT_EQ(s["init_pose"]["phi_deg"].get<double>(), -4.5);
  // Other scenes are untouched.
  EXPECT_EQ(body_of(again.Get("/api/scenes/scene_000")), scene_to_json(read_manifest(manifest_).scenes[0]));

  EXPECT_EQ(again.Post("/api/scenes/scene_001/init", R"({"theta_deg": 0, "phi_deg": 91})", "application/json")->status, 400);
  EXPECT_EQ(again.Post("/api/scenes/scene_001/init", "{oops", "application/json")->status, 400);
  EXPECT_EQ(again.Post("/api/scenes/scene_001/init", R"({"theta_deg": 1})", "application/json")->status, 400);
  EXPECT_EQ(again.Post("/api/scenes/zzz/init", R"({"theta_deg": 1, "phi_deg": 0})", "application/json")->status, 404);
}

TEST_F(ServerTest, RatingsAppendOneRowEach) {
  auto cli = client();
  const auto a = cli.Post("/api/ratings", R"({"scene_id":"scene_000","left_ref":"init","right_ref":"best","choice":"right"})",
                          "application/json");
  ASSERT_EQ(a->status, 201) << a->body;
  const auto b = cli.Post("/api/ratings", R"({"scene_id":"scene_001","left_ref":"c7","right_ref":"init","choice":"same"})",
                          "application/json");
  ASSERT_EQ(b->status, 201);
  EXPECT_EQ(cli.Post("/api/ratings", R"({"scene_id":"scene_000","left_ref":"a","right_ref":"b","choice":"both"})",
                     "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/api/ratings", R"({"scene_id":"scene_000","left_ref":"a","choice":"left"})",
                     "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/api/ratings", R"({"scene_id":"ghost","left_ref":"a","right_ref":"b","choice":"left"})",
                     "application/json")->status, 404);
  const std::string text = read_text(dir_ / "ratings.jsonl");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  std::istringstream lines(text);
  std::string first;
  std::getline(lines, first);
  const Json row = Json::parse(first);
  EXPECT_EQ(row["scene_id"], "scene_000");
  EXPECT_EQ(row["left_ref"], "init");
  EXPECT_EQ(row["choice"], "right");
}

TEST(ServerStartup, MissingManifestThrows) {
  ServeOptions opts;
  opts.manifest = "/nonexistent/m.jsonl";
  EXPECT_THROW(ApiServer{opts}, std::runtime_error);
}
