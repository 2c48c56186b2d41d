#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cli.hpp"
#include "jointflow/config_io.hpp"
#include "jointflow/flow_io.hpp"
#include "jointflow/image_io.hpp"
#include "oracles.hpp"

using namespace jointflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = fs::temp_directory_path() / ("jointflow_" + tag + "_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "jointflow");
  std::ostringstream out, err;
  const int code = jointflow::cli::runCli(args, out, err);
  return {code, out.str(), err.str()};
}

Image grainy(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Image img(w, h);
  for (auto& x : img.data()) x = u(rng);
  return img;
}

}  // namespace

TEST_CASE("PGM") {
  const Image img = grainy(13, 7, 91);
  SUBCASE("16-bit roundtrip") {
    const auto back = decodePgm(encodePgm(img, 16));
    REQUIRE(back.sameShape(img));
    for (std::size_t p = 0; p < img.size(); ++p) CHECK(std::abs(back[p] - img[p]) <= 1.0 / 65535);
  }
  SUBCASE("8-bit quantization bound") {
    const auto back = decodePgm(encodePgm(img, 8));
    for (std::size_t p = 0; p < img.size(); ++p) CHECK(std::abs(back[p] - img[p]) <= 0.5 / 255 + 1e-12);
  }
  SUBCASE("ascii and binary decode identically") {
    for (int depth : {8, 16})
      CHECK(decodePgm(encodePgm(img, depth, PgmEncoding::Ascii)) == decodePgm(encodePgm(img, depth)));
  }
  SUBCASE("hand-written header with comment") {
    const std::string bytes = std::string("P5\n# note\n2 1\n255\n") + char(0) + char(255);
    const auto d = decodePgm(bytes);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == 1.0);
  }
  SUBCASE("malformed input") {
    const auto good = encodePgm(img, 16);
    CHECK_THROWS_AS(decodePgm(good.substr(0, good.size() - 3)), IoError);
    CHECK_THROWS_AS(decodePgm("P6\n2 2\n255\n0000"), IoError);
    CHECK_THROWS_AS(decodePgm("P5\n2 2\n0\n0000"), IoError);
    CHECK_THROWS_AS(decodePgm(""), IoError);
    CHECK_THROWS_AS(encodePgm(img, 12), IoError);
  }
  SUBCASE("values outside [0, 1] are clamped on write") {
    const auto back = decodePgm(encodePgm(Image(2, 1, {-0.5, 1.5}), 8));
    CHECK(back[0] == 0.0);
    CHECK(back[1] == 1.0);
  }
}

TEST_CASE("files") {
  TempDir dir("files");
  const Image img = grainy(9, 11, 92);
  for (int depth : {8, 16}) {
    const auto png = dir.path / ("a" + std::to_string(depth) + ".png");
    writeImage(png, img, depth);
    const auto back = readImage(png);
    REQUIRE(back.sameShape(img));
    for (std::size_t p = 0; p < img.size(); ++p) CHECK(std::abs(back[p] - img[p]) <= 0.5 / ((1 << depth) - 1) + 1e-12);
  }
  writeImage(dir.path / "b.pgm", img);
  CHECK(readImage(dir.path / "b.pgm") == decodePgm(encodePgm(img)));
  CHECK_THROWS_AS(readImage(dir.path / "missing.pgm"), IoError);
  {
    std::ofstream(dir.path / "broken.png", std::ios::binary) << "\x89PNG\r\n\x1a\nxx";
  }
  CHECK_THROWS_AS(readImage(dir.path / "broken.png"), IoError);
  CHECK_THROWS_AS(writeImage(dir.path / "c.bmp", img), IoError);

  // no temporary siblings are left behind
  for (const auto& e : fs::directory_iterator(dir.path)) CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  const auto frames = listFrameFiles(dir.path);
  REQUIRE(frames.size() == 4);
  CHECK(frames[0].filename() == "a16.png");
  CHECK(frames[3].filename() == "broken.png");
}

TEST_CASE(".flo") {
  SUBCASE("hand-composed 2x1 file") {
    FlowField v(2, 1);
    v.v1[0] = 1.5;
    v.v2[0] = -2.0;
    const unsigned char expected[28] = {'P', 'I', 'E', 'H', 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0xC0, 0x3F,
                                        0,   0,   0,   0xC0, 0, 0, 0, 0, 0, 0, 0, 0};
    const auto bytes = encodeFlo(v);
    REQUIRE(bytes.size() == 28);
    for (int k = 0; k < 28; ++k) CHECK(static_cast<unsigned char>(bytes[k]) == expected[k]);
    CHECK(decodeFlo(bytes) == v);
  }
  SUBCASE("file roundtrip is bit-identical at float precision") {
    TempDir dir("flo");
    std::mt19937_64 rng(93);
    FlowField v = oracle::smoothFlow(7, 5, 3.0, rng);
    for (auto* c : {&v.v1, &v.v2})
      for (auto& x : c->data()) x = static_cast<float>(x);
    writeFlo(dir.path / "v.flo", v);
    CHECK(readFlo(dir.path / "v.flo") == v);
    CHECK(encodeFlo(readFlo(dir.path / "v.flo")) == readFileBytes(dir.path / "v.flo"));
  }
  SUBCASE("rejections") {
    auto bytes = encodeFlo(FlowField(2, 2));
    CHECK_THROWS_AS(decodeFlo(bytes.substr(0, 8)), IoError);
    CHECK_THROWS_AS(decodeFlo(bytes.substr(0, bytes.size() - 4)), IoError);
    CHECK_THROWS_AS(decodeFlo(bytes + "abcd"), IoError);
    bytes[0] = 'X';
    CHECK_THROWS_AS(decodeFlo(bytes), IoError);
  }
}

TEST_CASE("flow colours") {
  SUBCASE("zero flow is white") {
    const auto c = flowToColor(FlowField(3, 2));
    for (auto x : c.rgb) CHECK(x == 255);
  }
  SUBCASE("(max, 0) is pure red, unknown flow black") {
    CHECK(flowVectorColor(2.0, 0.0, 2.0) == std::array<std::uint8_t, 3>{255, 0, 0});
    FlowField v(2, 1);
    v.v1[0] = 1e10;
    v.v1[1] = 1.0;
    const auto c = flowToColor(v, 1.0);
    CHECK(c.rgb[0] == 0);
    CHECK(c.rgb[1] == 0);
    CHECK(c.rgb[2] == 0);
    CHECK(c.rgb[3] == 255);
    CHECK(c.rgb[4] == 0);
    CHECK(c.rgb[5] == 0);
  }
  SUBCASE("vortex: a quarter turn of the image is a quarter turn of hue") {
    const int n = 15;
    const double c = (n - 1) / 2.0;
    FlowField v(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        v.v1.at(i, j) = -(j - c);
        v.v2.at(i, j) = i - c;
      }
    const auto img = flowToColor(v);
    // automatic scale: 99th-percentile magnitude
    std::vector<double> mags;
    for (std::size_t p = 0; p < v.size(); ++p) mags.push_back(std::hypot(v.v1[p], v.v2[p]));
    std::sort(mags.begin(), mags.end());
    const double scale = mags[static_cast<std::size_t>(0.99 * (mags.size() - 1))];
    int distinct = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        // (x, y) -> (-y, x) about the centre
        const int ri = static_cast<int>(c - (j - c)), rj = static_cast<int>(c + (i - c));
        const std::size_t p = j * n + i, q = rj * n + ri;
        const auto rotated = flowVectorColor(-v.v2[p], v.v1[p], scale);
        for (int k = 0; k < 3; ++k) CHECK(img.rgb[q * 3 + k] == rotated[k]);
        distinct += img.rgb[q * 3] != img.rgb[p * 3];
      }
    CHECK(distinct > 0);
  }
}

TEST_CASE("config files") {
  SolveConfig cfg;
  cfg.alpha = 0.05;
  cfg.operatorKind = OperatorKind::Blur;
  cfg.blurSigma = 1.3;
  cfg.init = InitKind::SmoothTime;
  CHECK(configFromJson(configToJson(cfg)) == cfg);
  CHECK(parseConfigText(configToJson(cfg).dump()) == cfg);
  const auto kv = parseConfigText("# comment\nalpha = 0.05\noperator = blur\nblurSigma=1.3\ninit=smooth\n");
  CHECK(kv == cfg);
  CHECK_THROWS_AS(parseConfigText("alhpa = 1"), std::invalid_argument);
  CHECK_THROWS_AS(parseConfigText("{\"alpha\": \"x\"}"), std::invalid_argument);
}

TEST_CASE("command line") {
  TempDir dir("cli");
  const auto d = dir.path.string();

  SUBCASE("usage errors") {
    CHECK(invoke({}).code != 0);
    CHECK(invoke({"frobnicate"}).code != 0);
    const auto r = invoke({"joint", "--alpha", "abc"});
    CHECK(r.code != 0);
    CHECK_FALSE(r.err.empty());
    CHECK(invoke({"joint", d + "/nothing", "-o", d + "/o", "--alpha", "-1"}).code == 2);
    CHECK(invoke({"denoise", d + "/nothing", "-o", d + "/o"}).code != 0);
    CHECK(invoke({"synth", "-o", d + "/s", "--frames", "1"}).code != 0);
  }

  SUBCASE("dump-config roundtrips through --config") {
    const auto a = invoke({"joint", "--alpha", "0.05", "--eta", "0.7", "--operator", "subsample", "--dump-config"});
    REQUIRE(a.code == 0);
    {
      std::ofstream(dir.path / "cfg.json") << a.out;
    }
    const auto b = invoke({"joint", "--config", d + "/cfg.json", "--dump-config"});
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j.at("alpha") == 0.05);
    const double sigmaD = j.at("sigmaD");
    CHECK(sigmaD == doctest::Approx(defaultPyramidSigma(0.7)));
    // flags override the file
    const auto c = invoke({"joint", "--config", d + "/cfg.json", "--alpha", "0.1", "--dump-config"});
    CHECK(nlohmann::json::parse(c.out).at("alpha") == 0.1);
    {
      std::ofstream(dir.path / "cfg.txt") << std::setprecision(17) << "alpha = 0.05\neta = 0.7\nsigmaD = " << defaultPyramidSigma(0.7)
                                          << "\noperator = subsample\n";
    }
    CHECK(nlohmann::json::parse(invoke({"joint", "--config", d + "/cfg.txt", "--dump-config"}).out) == j);
  }

  SUBCASE("synth, joint, evaluate") {
    const std::vector<std::string> small = {"--max-outer", "1", "--max-flow-iter", "300", "--max-image-iter", "2000"};
    REQUIRE(invoke({"synth", "-o", d + "/s", "--width", "16", "--height", "16", "--frames", "2", "--blobs", "2",
                 "--dx", "1", "--dy", "0", "--noise", "0.01", "--seed", "5"})
                .code == 0);
    CHECK(fs::exists(dir.path / "s/synth.json"));
    CHECK(listFrameFiles(dir.path / "s/clean").size() == 2);
    CHECK(listFrameFiles(dir.path / "s/noisy").size() == 2);
    CHECK(fs::exists(dir.path / "s/clean/flow_00.flo"));

    std::vector<std::string> args = {"joint", d + "/s/noisy", "-o", d + "/j"};
    args.insert(args.end(), small.begin(), small.end());
    REQUIRE(invoke(args).code == 0);
    for (auto name : {"u_00.pgm", "u_01.pgm", "flow_00.flo", "flow_00.ppm", "diagnostics.json", "timings.json"})
      CHECK(fs::exists(dir.path / "j" / name));
    const auto diag = nlohmann::json::parse(readFileBytes(dir.path / "j/diagnostics.json"));
    CHECK(diag.at("schemaVersion") == kDiagnosticsSchemaVersion);
    CHECK(diag.at("outerIterations").size() == 1);

    const auto e = invoke({"evaluate", d + "/j", d + "/s/clean", "--sequence", "blobs"});
    REQUIRE(e.code == 0);
    std::istringstream lines(e.out);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK(header == "sequence,SSIM,L2Error,PSNR,PSNR255,EPE,AE");
    CHECK(row.rfind("blobs,", 0) == 0);
    CHECK(std::count(row.begin(), row.end(), ',') == 6);

    const auto self = invoke({"evaluate", d + "/s/clean", d + "/s/clean", "-o", d + "/self.csv"});
    REQUIRE(self.code == 0);
    std::istringstream csv(readFileBytes(dir.path / "self.csv"));
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(row == "clean,1,0,inf,inf,0,0");  // name defaults to the reference directory
  }

  SUBCASE("joint with gamma 0 equals denoise") {
    REQUIRE(invoke({"synth", "-o", d + "/s", "--width", "14", "--height", "12", "--frames", "2", "--blobs", "2",
                 "--noise", "0.01"})
                .code == 0);
    REQUIRE(invoke({"denoise", d + "/s/noisy", "-o", d + "/den", "--alpha", "0.03"}).code == 0);
    REQUIRE(invoke({"joint", d + "/s/noisy", "-o", d + "/jg", "--alpha", "0.03", "--gamma", "0", "--max-outer", "1",
                 "--max-flow-iter", "200"})
                .code == 0);
    const auto a = listFrameFiles(dir.path / "den"), b = listFrameFiles(dir.path / "jg");
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);
    for (int k = 0; k < 2; ++k) CHECK(readFileBytes(a[k]) == readFileBytes(b[k]));
  }

  SUBCASE("flow subcommand") {
    writeImage(dir.path / "a.pgm", grainy(16, 16, 94));
    writeImage(dir.path / "b.pgm", grainy(16, 16, 94));
    REQUIRE(invoke({"flow", d + "/a.pgm", d + "/b.pgm", "-o", d + "/v.flo", "--color", d + "/v.ppm"}).code == 0);
    const auto v = readFlo(dir.path / "v.flo");
    CHECK(v.width() == 16);
    for (double x : v.v1.values()) CHECK(std::abs(x) <= 1e-6);
    CHECK(fs::exists(dir.path / "v.ppm"));
    CHECK(invoke({"flow", d + "/a.pgm", d + "/missing.pgm", "-o", d + "/w.flo"}).code == 1);
  }
}
