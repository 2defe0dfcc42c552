#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "cd2/image_io.hpp"
#include "cd2/signature.hpp"
#include "synth.hpp"

namespace cd2 {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
};

Run cd2(const std::string& args) {
  const std::string cmd = std::string(CD2_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

double field(const std::string& text, const std::string& name) {
  const std::regex re("(^|\\s)" + name + " (-?[0-9.eE+-]+|inf|nan)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nan("");
  return std::stod(m[2]);
}

scoring::GrayImage gray(const imaging::LuminanceMap& m) { return {m.width, m.height, m.data}; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cd2_cli_" + std::to_string(::getpid()) + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const imaging::LuminanceMap& img) const {
    io::write_gray(gray(img), path(name));
    return path(name);
  }

  fs::path dir_;

 public:
  std::string file(const std::string& name) const { return path(name); }
  void write_image(const std::string& name, const imaging::LuminanceMap& img) const { write(name, img); }
};

TEST_F(Cli, ExtractReportsCodecSize) {
  const auto img = write("hd.png", synth::random_image(1920, 720, 3));
  const auto r = cd2("extract " + img + " -o " + path("hd.cd2"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("8080 bytes"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("64512 bits"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("21 bits per bin"), std::string::npos) << r.out;
  EXPECT_EQ(fs::file_size(path("hd.cd2")), 8080u);
}

TEST_F(Cli, ColourAndGrayInputs) {
  const std::string data = CD2_TEST_DATA;
  EXPECT_EQ(cd2("extract " + data + "/camera.png -o " + path("g.cd2")).code, 0);
  EXPECT_EQ(cd2("extract " + data + "/coffee.png -o " + path("c.cd2") + " --grid 4x4").code, 0);
  const auto bytes = slurp(path("c.cd2"));
  const auto sig = features::decode_signature(std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
  EXPECT_EQ(sig.width, 600);
  EXPECT_EQ(sig.height, 400);
  EXPECT_EQ(sig.grid.rows(), 4);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cd2("extract /nonexistent/x.png -o " + path("x.cd2")).code, 2);
  EXPECT_EQ(cd2("").code, 4);
  EXPECT_EQ(cd2("extract").code, 4);
  const auto img = write("a.pgm", synth::textured_image(64, 48, 1));
  EXPECT_EQ(cd2("extract " + img + " -o " + path("a.cd2") + " --grid 0x3").code, 4);
  EXPECT_EQ(cd2("extract " + img + " -o " + path("a.cd2") + " --grid 100x3").code, 4);
  ASSERT_EQ(cd2("extract " + img + " -o " + path("a.cd2")).code, 0);

  {
    std::ofstream bad(path("bad.cd2"), std::ios::binary);
    bad << "NOPE and more bytes";
  }
  EXPECT_EQ(cd2("compare " + path("bad.cd2") + " " + img).code, 2);
  ASSERT_EQ(cd2("extract " + img + " -o " + path("b.cd2") + " --grid 2x2").code, 0);
  EXPECT_EQ(cd2("compare " + path("a.cd2") + " " + path("b.cd2")).code, 3);
  const auto other = write("other.pgm", synth::textured_image(50, 48, 1));
  EXPECT_EQ(cd2("compare " + path("a.cd2") + " " + other).code, 3);

  {
    std::ofstream t(path("tau.txt"));
    t << "scale=0.5\n";
  }
  EXPECT_EQ(cd2("score " + path("a.cd2") + " " + img + " --thresholds " + path("tau.txt") + " --operation blur").code, 4);
}

TEST_F(Cli, CompareAgainstItselfAndNoise) {
  const auto base = synth::textured_image(256, 192, 5);
  const auto ref = write("ref.png", base);
  const auto noisy = write("noisy.png", synth::add_gaussian_noise(base, 15, 2));
  ASSERT_EQ(cd2("extract " + ref + " -o " + path("ref.cd2")).code, 0);
  ASSERT_EQ(cd2("extract " + noisy + " -o " + path("noisy.cd2")).code, 0);

  auto self = cd2("compare " + path("ref.cd2") + " " + path("ref.cd2"));
  ASSERT_EQ(self.code, 0);
  EXPECT_EQ(field(self.out, "cd2a_score"), 0.0) << self.out;
  self = cd2("compare " + path("ref.cd2") + " " + ref);
  EXPECT_EQ(field(self.out, "cd2a_score"), 0.0) << self.out;

  const auto r = cd2("compare " + path("ref.cd2") + " " + noisy);
  ASSERT_EQ(r.code, 0);
  EXPECT_GT(field(r.out, "cd2a_score"), 0.0) << r.out;
  EXPECT_LT(field(r.out, "noise_inc4_x"), 0.0) << r.out;
  EXPECT_LT(field(r.out, "noise_inc4_y"), 0.0) << r.out;
  EXPECT_EQ(cd2("compare " + path("ref.cd2") + " " + path("noisy.cd2")).out, r.out);

  {
    std::ofstream t(path("tau.txt"));
    t << "noise=0.01\nmild=1e9\n";
  }
  const auto unsafe = cd2("score " + path("ref.cd2") + " " + noisy + " --thresholds " + path("tau.txt") + " --operation noise");
  EXPECT_NE(unsafe.out.find("classification unsafe"), std::string::npos) << unsafe.out;
  const auto safe = cd2("score " + path("ref.cd2") + " " + noisy + " --thresholds " + path("tau.txt") + " --operation mild");
  EXPECT_NE(safe.out.find("classification safe"), std::string::npos) << safe.out;
}

TEST_F(Cli, Heatmap) {
  const auto base = synth::textured_image(160, 120, 5);
  const auto ref = write("ref.pgm", base);
  const auto blurred = write("blur.pgm", synth::box_blur(base, 3));
  ASSERT_EQ(cd2("extract " + ref + " -o " + path("ref.cd2") + " --grid 3x5").code, 0);

  ASSERT_EQ(cd2("heatmap " + path("ref.cd2") + " " + blurred + " --heatmap " + path("h.pgm")).code, 0);
  auto h = slurp(path("h.pgm"));
  EXPECT_EQ(h.substr(0, 11), "P5\n5 3\n255\n");
  EXPECT_EQ(h.size(), 11u + 15u);

  ASSERT_EQ(cd2("compare " + path("ref.cd2") + " " + blurred + " --heatmap " + path("u.pgm") + " --upscale").code, 0);
  h = slurp(path("u.pgm"));
  EXPECT_EQ(h.substr(0, 15), "P5\n160 120\n255\n");
  EXPECT_EQ(h.size(), 15u + 160u * 120u);
  EXPECT_EQ(cd2("heatmap " + path("ref.cd2") + " " + blurred).code, 4);
}

// Three distortion families whose DMOS scales differ from their raw KL
// magnitudes, so a single monotone score cannot order them jointly.
std::string mixed_manifest(Cli& t) {
  const auto write = [&t](const std::string& n, const imaging::LuminanceMap& m) { t.write_image(n, m); };
  std::ostringstream csv;
  csv << "ref,dist,dmos,type,ref_id\n";
  for (int r = 0; r < 6; ++r) {
    const auto base = synth::textured_image(96, 72, 50 + r);
    const std::string ref = "ref" + std::to_string(r) + ".pgm";
    write(ref, base);
    for (int level = 1; level <= 4; ++level) {
      const std::string id = std::to_string(r) + "_" + std::to_string(level);
      write("n" + id + ".pgm", synth::add_gaussian_noise(base, 3.0 * level, 100 * r + level));
      csv << ref << ",n" << id << ".pgm," << 10 * level << ",noise,r" << r << '\n';
      write("b" + id + ".pgm", synth::box_blur(base, level));
      csv << ref << ",b" << id << ".pgm," << 5 + 20 * level << ",blur,r" << r << '\n';
      write("c" + id + ".pgm", synth::contrast_clip(base, 1.0 + 0.5 * level));
      csv << ref << ",c" << id << ".pgm," << 2 + 8 * level << ",clip,r" << r << '\n';
    }
  }
  std::ofstream(t.file("manifest.csv")) << csv.str();
  return t.file("manifest.csv");
}

TEST_F(Cli, TrainAndEvalMixedDistortions) {
  const auto manifest = mixed_manifest(*this);
  const std::string opts = " --grid 3x4 --trees 150 --min-leaf 3 --seed 4";
  const auto tr = cd2("train " + manifest + " --model " + path("m.cd2b") + opts);
  ASSERT_EQ(tr.code, 0) << tr.out;
  EXPECT_NE(slurp(path("m.cd2b")).find("cd2b-model 1"), std::string::npos);

  const auto ev = cd2("eval " + manifest + " --method cd2a --method cd2b --method psnr --csv " + path("a.csv") + opts);
  ASSERT_EQ(ev.code, 0) << ev.out;
  std::ifstream csv(path("a.csv"));
  std::string line;
  std::map<std::string, double> srocc;
  std::getline(csv, line);
  EXPECT_EQ(line, "method,rows,failed,rmse,plcc,srocc");
  while (std::getline(csv, line)) {
    const auto method = line.substr(0, line.find(','));
    srocc[method] = std::stod(line.substr(line.rfind(',') + 1));
  }
  ASSERT_EQ(srocc.size(), 3u);
  EXPECT_GE(srocc["cd2b"], srocc["cd2a"]) << ev.out;

  const auto again = cd2("eval " + manifest + " --method cd2a --method cd2b --method psnr --csv " + path("b.csv") + opts);
  EXPECT_EQ(again.out, ev.out);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));

  const auto fixed = cd2("eval " + manifest + " --method cd2b --model " + path("m.cd2b") + opts);
  EXPECT_EQ(fixed.code, 0) << fixed.out;
}

TEST_F(Cli, IdentityManifestSurfacesDegenerateMetrics) {
  std::ofstream csv(path("id.csv"));
  csv << "ref,dist,dmos,type,ref_id\n";
  for (int r = 0; r < 5; ++r) {
    const auto name = "r" + std::to_string(r) + ".pgm";
    write(name, synth::textured_image(48, 48, r));
    csv << name << ',' << name << ",0,none,r" << r << '\n';
  }
  csv.close();
  const auto r = cd2("eval " + path("id.csv") + " --method cd2a --grid 2x2");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("undefined"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("RMSE  0\n"), std::string::npos) << r.out;
}

TEST_F(Cli, AnalyzeBundledPhotos) {
  const std::string data = CD2_TEST_DATA;
  const auto r = cd2("analyze " + data + "/astronaut.png " + data + "/coffee.png " + data + "/chelsea.png");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("iqr"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("median"), std::string::npos) << r.out;
  EXPECT_EQ(cd2("analyze " + data + "/astronaut.png " + data + "/coffee.png " + data + "/chelsea.png").out, r.out);
}

}  // namespace
}  // namespace cd2
