#include <gtest/gtest.h>

#include <filesystem>
#include <thread>
#include <unistd.h>

#include "scif/service.hpp"

namespace scif {
namespace {

using nlohmann::json;

std::string bytes_of(const RasterImage& img, RasterFormat fmt = RasterFormat::kPnm) {
  const auto b = encode_image(img, fmt);
  return std::string(b.begin(), b.end());
}

// Dark left, bright right, split between columns 31 and 32.
RasterImage step_image(std::uint32_t n = 64) {
  std::vector<float> d(std::size_t{n} * n * 3);
  for (std::uint32_t y = 0; y < n; ++y)
    for (std::uint32_t x = 0; x < n; ++x)
      for (int c = 0; c < 3; ++c) d[(y * n + x) * 3 + c] = x >= n / 2 ? 0.8f : 0.2f;
  return RasterImage(n, n, 3, std::move(d));
}

RasterImage decode(const HttpResponse& r) {
  return decode_image(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(r.body.data()), r.body.size()));
}

std::filesystem::path scratch(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("scif_service_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

struct Fixture {
  SessionService service;
  std::string id;
  json summary;

  explicit Fixture(const RasterImage& img = step_image(), std::map<std::string, std::string> params = {})
      : service() {
    const auto r = service.create_session(bytes_of(img), params);
    EXPECT_EQ(r.status, 201) << r.body;
    summary = json::parse(r.body);
    id = summary.at("id");
  }
};

TEST(ServiceCreate, HappyPathAndErrors) {
  Fixture f;
  EXPECT_EQ(f.summary.at("width"), 64);
  EXPECT_FALSE(f.summary.at("contours").empty());
  for (const auto& c : f.summary.at("contours")) {
    EXPECT_TRUE(c.contains("id"));
    EXPECT_TRUE(c.contains("length"));
    EXPECT_EQ(c.at("bbox").size(), 4u);
  }
  EXPECT_EQ(f.service.create_session("").status, 400);
  EXPECT_EQ(f.service.create_session("not an image").status, 400);
  EXPECT_EQ(f.service.create_session(std::string(kMaxUploadBytes + 1, 'P')).status, 413);
  EXPECT_EQ(f.service.create_session(bytes_of(step_image()), {{"sparsity", "0.9"}}).status, 400);
  EXPECT_EQ(f.service.create_session(bytes_of(step_image()), {{"kind", "texture"}}).status, 400);
  EXPECT_EQ(f.service.session_count(), 1u);
}

TEST(ServiceCreate, ConstantImageHasNoContours) {
  SessionService service;
  const auto r = service.create_session(bytes_of(RasterImage(40, 40, 3, 0.3f), RasterFormat::kPng));
  ASSERT_EQ(r.status, 201);
  EXPECT_TRUE(json::parse(r.body).at("contours").empty());
}

TEST(ServiceEdits, TranslateShiftsBoundingBox) {
  Fixture f;
  const auto& first = f.summary.at("contours").at(0);
  const std::uint32_t cid = first.at("id");
  const auto before = first.at("bbox");
  const auto r = f.service.apply_edits(f.id, json::array({{{"op", "translate"}, {"ids", {cid}}, {"dx", 5}, {"dy", 0}}}).dump());
  ASSERT_EQ(r.status, 200) << r.body;
  for (const auto& c : json::parse(r.body).at("contours"))
    if (c.at("id") == cid) {
      EXPECT_EQ(c.at("bbox")[0].get<int>(), before[0].get<int>() + 5);
      EXPECT_EQ(c.at("bbox")[2].get<int>(), before[2].get<int>() + 5);
      EXPECT_EQ(c.at("bbox")[1], before[1]);
    }
}

TEST(ServiceEdits, ErrorsAndIdentity) {
  Fixture f;
  const auto bad = f.service.apply_edits(f.id, R"([{"op":"erase","ids":[9999]}])");
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(json::parse(bad.body).at("op_index"), 0);
  const auto second = f.service.apply_edits(f.id, R"([{"op":"erase","ids":[0]},{"op":"spin"}])");
  EXPECT_EQ(second.status, 422);
  EXPECT_EQ(json::parse(second.body).at("op_index"), 1);
  EXPECT_EQ(f.service.apply_edits(f.id, "{not json").status, 422);
  EXPECT_EQ(f.service.apply_edits("ffff", "[]").status, 404);
  const auto before = f.service.session(f.id)->current;
  ASSERT_EQ(f.service.apply_edits(f.id, "[]").status, 200);
  EXPECT_EQ(f.service.session(f.id)->current, before);
  EXPECT_EQ(json::parse(f.service.get_contours(f.id, false).body).at("history"), 0);
}

TEST(ServiceEdits, PasteFromAnotherSession) {
  Fixture f;
  const auto donor = json::parse(f.service.create_session(bytes_of(step_image()), {{"kind", "gradient"}}).body);
  const std::string src = donor.at("id");
  const auto r = f.service.apply_edits(
      f.id, json::array({{{"op", "erase"}, {"box", {0, 0, 63, 63}}},
                         {{"op", "paste"}, {"src", src}, {"box", {0, 0, 63, 63}}, {"dx", 0}, {"dy", 0}}})
                .dump());
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(json::parse(r.body).at("contours").size(), donor.at("contours").size());
  EXPECT_EQ(f.service.apply_edits(f.id, R"([{"op":"paste","src":"abc","ids":[0],"dx":0,"dy":0}])").status, 422);
}

TEST(ServiceReconstruction, StepMatchesSourceAwayFromEdge) {
  Fixture f;
  const auto r = f.service.get_reconstruction(f.id, "png");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "image/png");
  const auto img = decode(r), src = step_image();
  for (std::uint32_t y = 0; y < 64; ++y)
    for (std::uint32_t x = 0; x < 64; ++x) {
      if (x >= 29 && x <= 34) continue;  // edge pixels and two on each side
      for (std::uint32_t c = 0; c < 3; ++c) EXPECT_NEAR(img.at(x, y, c), src.at(x, y, c), 0.05) << x << "," << y;
    }
  EXPECT_EQ(f.service.get_reconstruction(f.id, "png").body, r.body);  // cached, byte-identical
  const auto ppm = f.service.get_reconstruction(f.id, "ppm");
  EXPECT_EQ(ppm.content_type, "image/x-portable-pixmap");
  EXPECT_EQ(decode(ppm), img);
  EXPECT_EQ(f.service.get_reconstruction(f.id, "gif").status, 400);
  EXPECT_EQ(f.service.get_reconstruction("0123", "png").status, 404);
}

TEST(ServiceReconstruction, EraseAllGivesAnchor) {
  Fixture f;
  ASSERT_EQ(f.service.apply_edits(f.id, R"([{"op":"erase","box":[0,0,63,63]}])").status, 200);
  const auto img = decode(f.service.get_reconstruction(f.id, "ppm"));
  const auto& anchor = f.service.session(f.id)->current.dc_anchor;
  for (std::uint32_t y = 0; y < 64; ++y)
    for (std::uint32_t x = 0; x < 64; ++x)
      for (std::uint32_t c = 0; c < 3; ++c) EXPECT_NEAR(img.at(x, y, c), anchor[c], 1.0 / 510 + 1e-7);
}

TEST(ServiceReconstruction, NonConvergenceIs503) {
  SolverConfig solver;
  solver.max_iterations = 1;
  SessionService service({}, solver);
  const auto id = json::parse(service.create_session(bytes_of(step_image())).body).at("id").get<std::string>();
  const auto r = service.get_reconstruction(id, "png");
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(json::parse(r.body).at("iterations"), 1);
  EXPECT_EQ(service.get_metrics(id).status, 503);
}

TEST(ServiceUndo, StackSemantics) {
  Fixture f;
  EXPECT_EQ(f.service.undo(f.id).status, 409);
  EXPECT_EQ(f.service.undo("abcd").status, 404);
  const auto original = f.service.session(f.id)->current;
  ASSERT_EQ(f.service.apply_edits(f.id, R"([{"op":"translate","box":[0,0,63,63],"dx":3,"dy":0}])").status, 200);
  const auto once = f.service.session(f.id)->current;
  ASSERT_EQ(f.service.apply_edits(f.id, R"([{"op":"erase","box":[0,0,63,63]}])").status, 200);
  ASSERT_EQ(f.service.undo(f.id).status, 200);
  EXPECT_EQ(f.service.session(f.id)->current, once);
  ASSERT_EQ(f.service.undo(f.id).status, 200);
  EXPECT_EQ(f.service.session(f.id)->current, original);
  EXPECT_EQ(f.service.undo(f.id).status, 409);
}

TEST(ServiceUndo, HistoryIsBounded) {
  Fixture f;
  for (std::size_t i = 0; i < kMaxHistory + 5; ++i)
    ASSERT_EQ(f.service.apply_edits(f.id, R"([{"op":"translate","box":[0,0,63,63],"dx":0,"dy":0}])").status, 200);
  EXPECT_EQ(f.service.session(f.id)->history.size(), kMaxHistory);
}

TEST(ServiceReads, ContoursMetricsExport) {
  Fixture f;
  const auto full = json::parse(f.service.get_contours(f.id, true).body);
  const auto& c0 = full.at("contours").at(0);
  EXPECT_EQ(c0.at("points").size(), c0.at("length").get<std::size_t>());
  EXPECT_EQ(c0.at("features").size(), 6 * c0.at("length").get<std::size_t>());
  EXPECT_EQ(f.service.get_contours("9", false).status, 404);
  const auto m = json::parse(f.service.get_metrics(f.id).body);
  EXPECT_GT(m.at("psnr").get<double>(), 20.0);
  EXPECT_LE(m.at("ssim").get<double>(), 1.0);
  EXPECT_EQ(m.at("iterations").size(), 3u);
  const auto exp = f.service.export_scif(f.id);
  EXPECT_EQ(exp.content_type, "application/octet-stream");
  EXPECT_EQ(deserialize(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(exp.body.data()), exp.body.size())),
            f.service.session(f.id)->current);
}

TEST(ServiceConcurrency, EditsToOneSessionSerialize) {
  Fixture f;
  const auto before = json::parse(f.service.get_contours(f.id, false).body).at("contours");
  std::vector<std::thread> workers;
  for (int t = 0; t < 6; ++t)
    workers.emplace_back([&] {
      for (int i = 0; i < 2; ++i)
        EXPECT_EQ(f.service.apply_edits(f.id, R"([{"op":"translate","box":[0,0,63,63],"dy":0,"dx":-1}])").status, 200);
    });
  for (int t = 0; t < 3; ++t)
    workers.emplace_back([&] { EXPECT_EQ(f.service.get_reconstruction(f.id, "png").status, 200); });
  for (auto& w : workers) w.join();
  const auto after = json::parse(f.service.get_contours(f.id, false).body);
  EXPECT_EQ(after.at("history"), 12);
  // Twelve unit moves in any order land every contour 12 px to the left.
  EXPECT_EQ(after.at("contours")[0].at("bbox")[0].get<int>(), before[0].at("bbox")[0].get<int>() - 12);
}

TEST(ServicePersistence, RestartRecoversSessions) {
  const auto dir = scratch("persist");
  std::string id;
  SparseRepresentation edited;
  {
    SessionService service(dir);
    id = json::parse(service.create_session(bytes_of(step_image())).body).at("id");
    ASSERT_EQ(service.apply_edits(id, R"([{"op":"translate","box":[0,0,63,63],"dx":4,"dy":1}])").status, 200);
    edited = service.session(id)->current;
  }
  EXPECT_TRUE(std::filesystem::exists(dir / id / "current.scif"));
  std::filesystem::create_directories(dir / "junk");  // not a session; skipped
  SessionService restarted(dir);
  ASSERT_EQ(restarted.session_count(), 1u);
  EXPECT_EQ(restarted.session(id)->current, edited);
  EXPECT_EQ(restarted.session(id)->source, decode_image(encode_image(step_image(), RasterFormat::kPnm)));
  EXPECT_EQ(restarted.get_reconstruction(id, "png").status, 200);
  std::filesystem::remove_all(dir);
}

TEST(ServiceHttp, LiveRoundTrip) {
  SessionService service;
  httplib::Server server;
  service.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto created = client.Post("/sessions?kind=color", bytes_of(step_image()), "image/x-portable-pixmap");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  EXPECT_EQ(created->get_header_value("Access-Control-Allow-Origin"), "*");
  const std::string id = json::parse(created->body).at("id");
  EXPECT_EQ(json::parse(created->body).at("kind"), "color");

  const auto contours = client.Get("/sessions/" + id + "/contours?full=1");
  ASSERT_TRUE(contours);
  EXPECT_TRUE(json::parse(contours->body).at("contours").at(0).contains("points"));
  const auto edit = client.Post("/sessions/" + id + "/edits", R"([{"op":"erase","ids":[424242]}])", "application/json");
  ASSERT_TRUE(edit);
  EXPECT_EQ(edit->status, 422);
  const auto undo = client.Post("/sessions/" + id + "/undo", "", "application/json");
  ASSERT_TRUE(undo);
  EXPECT_EQ(undo->status, 409);
  const auto png = client.Get("/sessions/" + id + "/reconstruction?format=png");
  ASSERT_TRUE(png);
  EXPECT_EQ(png->status, 200);
  EXPECT_EQ(png->get_header_value("Content-Type"), "image/png");
  const auto missing = client.Get("/sessions/00ff/metrics");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  const auto preflight = client.Options("/sessions");
  ASSERT_TRUE(preflight);
  EXPECT_EQ(preflight->status, 204);

  server.stop();
  loop.join();
}

}  // namespace
}  // namespace scif
