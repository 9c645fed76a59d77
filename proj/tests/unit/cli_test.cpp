#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "scif/cli.hpp"

namespace scif {
namespace {

namespace fs = std::filesystem;

cli::Command parse(std::initializer_list<std::string> args) {
  std::vector<std::string> argv{"scif"};
  argv.insert(argv.end(), args);
  return cli::parse_args(argv);
}

template <class F>
RasterImage make(std::uint32_t w, std::uint32_t h, std::uint32_t ch, F f) {
  std::vector<float> d;
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x)
      for (std::uint32_t c = 0; c < ch; ++c) d.push_back(float(f(x, y, c)));
  return RasterImage(w, h, ch, std::move(d));
}

RasterImage step48() {
  return make(48, 48, 1, [](auto x, auto, auto) { return x < 24 ? 0.2 : 0.8; });
}

int usage_code(std::initializer_list<std::string> args) {
  try {
    parse(args);
  } catch (const cli::UsageError& e) {
    return e.code();
  }
  return -1;
}

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("scif_cli_test_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::initializer_list<std::string> args) {
    out_.str("");
    err_.str("");
    std::vector<std::string> argv{"scif"};
    argv.insert(argv.end(), args);
    try {
      return cli::run(cli::parse_args(argv), out_, err_);
    } catch (const cli::UsageError& e) {
      return e.code();
    }
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST(CliParse, EncodeWithFlags) {
  const auto cmd = std::get<cli::EncodeCmd>(parse({"encode", "in.ppm", "out.scif", "--sparsity", "0.05", "--kind", "gradient"}));
  EXPECT_EQ(cmd.input, "in.ppm");
  EXPECT_EQ(cmd.output, "out.scif");
  EXPECT_EQ(cmd.sparsity, 0.05);
  EXPECT_EQ(cmd.kind, FeatureKind::kGradient);
  EXPECT_FALSE(cmd.quantized);
  const auto color = std::get<cli::EncodeCmd>(
      parse({"encode", "a.png", "b.scif", "--kind", "color", "--quantized", "--min-length", "4", "--sigma", "2", "--offset", "1"}));
  EXPECT_EQ(color.kind, FeatureKind::kColor);
  EXPECT_TRUE(color.quantized);
  EXPECT_EQ(color.min_length, 4u);
  EXPECT_EQ(color.sigma, 2.0);
  EXPECT_EQ(color.offset, 1.0);
}

TEST(CliParse, Defaults) {
  const auto enc = std::get<cli::EncodeCmd>(parse({"encode", "in.ppm", "out.scif"}));
  EXPECT_EQ(enc.sparsity, 0.06);
  EXPECT_EQ(enc.kind, FeatureKind::kGradient);
  const auto dec = std::get<cli::DecodeCmd>(parse({"decode", "out.scif", "rec.ppm"}));
  EXPECT_EQ(dec.tolerance, 1e-6);
  EXPECT_EQ(dec.max_iters, 10000u);
  EXPECT_EQ(dec.lambda, 1e4);
  const auto sw = std::get<cli::SweepCmd>(parse({"sweep", "img.ppm", "--targets", "0.02,0.04"}));
  EXPECT_EQ(sw.targets, (std::vector<double>{0.02, 0.04}));
  EXPECT_EQ(std::get<cli::ServeCmd>(parse({"serve", "--port", "9000"})).port, 9000);
}

TEST(CliParse, UsageErrors) {
  EXPECT_EQ(usage_code({"encode", "in.ppm"}), cli::kUsage);
  EXPECT_EQ(usage_code({}), cli::kUsage);
  EXPECT_EQ(usage_code({"frobnicate"}), cli::kUsage);
  EXPECT_EQ(usage_code({"encode", "a", "b", "--bogus"}), cli::kUsage);
  EXPECT_EQ(usage_code({"encode", "a", "b", "--sparsity", "lots"}), cli::kUsage);
  EXPECT_EQ(usage_code({"encode", "a", "b", "--kind", "texture"}), cli::kUsage);
  EXPECT_EQ(usage_code({"sweep", "a", "--targets", "0.1,x"}), cli::kUsage);
  EXPECT_EQ(usage_code({"--help"}), cli::kOk);
}

TEST_F(CliRun, ConstantImageRoundTrip) {
  write_image(RasterImage(40, 30, 3, 0.3f), path("flat.ppm"));
  ASSERT_EQ(run({"encode", path("flat.ppm"), path("flat.scif")}), cli::kOk) << err_.str();
  EXPECT_TRUE(out_.str().empty());
  ASSERT_EQ(run({"decode", path("flat.scif"), path("rec.ppm")}), cli::kOk) << err_.str();
  EXPECT_TRUE(out_.str().empty());
  const auto rec = read_image(path("rec.ppm"));
  ASSERT_EQ(rec.width(), 40u);
  // The PPM round trip itself is 8-bit, so compare against the stored level.
  const double stored = std::round(0.3 * 255.0) / 255.0;
  for (float v : rec.data()) EXPECT_NEAR(v, stored, 1.0 / 510.0);
}

TEST_F(CliRun, TruncatedScifExitsFour) {
  write_image(step48(), path("step.pgm"));
  ASSERT_EQ(run({"encode", path("step.pgm"), path("step.scif"), "--min-length", "3"}), cli::kOk) << err_.str();
  auto bytes = read_file_bytes(path("step.scif"));
  ASSERT_GT(bytes.size(), 40u);
  bytes.resize(bytes.size() - 3);
  std::ofstream(path("cut.scif"), std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  EXPECT_EQ(run({"decode", path("cut.scif"), path("x.pgm")}), cli::kMalformedScif);
  EXPECT_NE(err_.str().find("contour "), std::string::npos) << err_.str();
}

TEST_F(CliRun, MetricsOnMismatchedSizes) {
  write_image(RasterImage(20, 20, 1, 0.5f), path("a.pgm"));
  write_image(RasterImage(20, 21, 1, 0.5f), path("b.pgm"));
  EXPECT_EQ(run({"metrics", path("a.pgm"), path("b.pgm")}), cli::kUsage);
  EXPECT_NE(err_.str().find("20"), std::string::npos) << err_.str();
  EXPECT_EQ(run({"metrics", path("a.pgm"), path("a.pgm")}), cli::kOk);
  EXPECT_EQ(out_.str(), "psnr,inf\nssim,1\n");
}

TEST_F(CliRun, IoAndSolverFailures) {
  EXPECT_EQ(run({"encode", path("missing.ppm"), path("o.scif")}), cli::kIo);
  write_image(RasterImage(20, 20, 1, 0.5f), path("a.pgm"));
  EXPECT_EQ(run({"encode", path("a.pgm"), path("nodir/o.scif")}), cli::kIo);
  // A representation that needs many iterations, capped at one.
  write_image(step48(), path("step.pgm"));
  ASSERT_EQ(run({"encode", path("step.pgm"), path("step.scif"), "--min-length", "3"}), cli::kOk);
  EXPECT_EQ(run({"decode", path("step.scif"), path("r.pgm"), "--max-iters", "1"}), cli::kSolver);
  EXPECT_FALSE(fs::exists(path("r.pgm")));
  EXPECT_EQ(run({"decode", path("a.pgm"), path("r.pgm")}), cli::kMalformedScif);
}

TEST_F(CliRun, EditScriptAndBadOp) {
  write_image(step48(), path("step.pgm"));
  ASSERT_EQ(run({"encode", path("step.pgm"), path("step.scif"), "--min-length", "3"}), cli::kOk);
  std::ofstream(path("ok.txt")) << "translate box=0,0,47,47 dx=-4 dy=0\n";
  EXPECT_EQ(run({"edit", path("step.scif"), path("ok.txt"), path("moved.scif")}), cli::kOk) << err_.str();
  const auto before = read_scif(path("step.scif")), after = read_scif(path("moved.scif"));
  ASSERT_FALSE(after.contours.contours.empty());
  EXPECT_EQ(after.contours.contours[0].points[0].x + 4, before.contours.contours[0].points[0].x);
  std::ofstream(path("bad.txt")) << "erase ids=0\nrotate ids=0 a=1\n";
  EXPECT_EQ(run({"edit", path("step.scif"), path("bad.txt"), path("x.scif")}), cli::kUsage);
  EXPECT_NE(err_.str().find("1"), std::string::npos);
}

TEST_F(CliRun, SweepWritesCsv) {
  const auto img = make(32, 32, 1, [](auto x, auto y, auto) { return (x / 8 + y / 8) % 2 ? 0.8 : 0.2; });
  write_image(img, path("checks.pgm"));
  ASSERT_EQ(run({"sweep", path("checks.pgm"), path("s.csv"), "--targets", "0.05,0.1", "--kind", "color"}), cli::kOk)
      << err_.str();
  std::ifstream f(path("s.csv"));
  const std::string file((std::istreambuf_iterator<char>(f)), {});
  EXPECT_EQ(file, out_.str());
  EXPECT_EQ(file.rfind("target,achieved,psnr,ssim,iterations\n", 0), 0u);
  EXPECT_EQ(std::count(file.begin(), file.end(), '\n'), 3);
}

TEST_F(CliRun, BinaryExitCodesAndDeterminism) {
  const std::string exe = SCIF_CLI_PATH;
  const auto status = [&](const std::string& args) {
    const int s = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("encode only_input.ppm"), 1);
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("decode " + path("nothing.scif") + " " + path("o.ppm")), 2);
  const auto img = make(40, 40, 3, [](auto x, auto y, auto c) {
    return x >= 10 && x < 30 && y >= 10 && y < 30 ? 0.3 * (c + 1) : 0.1;
  });
  write_image(img, path("sq.ppm"));
  for (const char* name : {"a", "b"}) {
    const std::string n(name);
    ASSERT_EQ(status("encode " + path("sq.ppm") + " " + path(n + ".scif") + " --min-length 4"), 0);
    ASSERT_EQ(status("decode " + path(n + ".scif") + " " + path(n + ".png")), 0);
  }
  EXPECT_EQ(read_file_bytes(path("a.scif")), read_file_bytes(path("b.scif")));
  EXPECT_EQ(read_file_bytes(path("a.png")), read_file_bytes(path("b.png")));
}

}  // namespace
}  // namespace scif
