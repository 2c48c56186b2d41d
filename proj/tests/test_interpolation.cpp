#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "jointflow/interpolation.hpp"
#include "oracles.hpp"

using namespace jointflow;

TEST_CASE("cubic1d") {
  CHECK(cubic1d(3, -1, 4, 7, 0.0) == -1.0);
  CHECK(cubic1d(3, -1, 4, 7, 1.0) == 4.0);
  CHECK(cubic1d(0, 1, 2, 3, 0.25) == doctest::Approx(1.25).epsilon(1e-15));

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> c(-3, 3), x01(0, 1);
  SUBCASE("matches the Hermite form of the Catmull-Rom spline") {
    for (int k = 0; k < 200; ++k) {
      const double p0 = c(rng), p1 = c(rng), p2 = c(rng), p3 = c(rng), x = x01(rng);
      CHECK(cubic1d(p0, p1, p2, p3, x) == doctest::Approx(oracle::catmullRom(p0, p1, p2, p3, x)).epsilon(1e-13));
      const auto w = cubicWeights(x);
      CHECK(w[0] * p0 + w[1] * p1 + w[2] * p2 + w[3] * p3 == doctest::Approx(cubic1d(p0, p1, p2, p3, x)).epsilon(1e-13));
      CHECK(w[0] + w[1] + w[2] + w[3] == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  SUBCASE("reproduces quadratics exactly") {
    for (int k = 0; k < 1000; ++k) {
      const double a = c(rng), b = c(rng), d = c(rng), x = x01(rng);
      auto q = [&](double t) { return (a * t + b) * t + d; };
      CHECK(std::abs(cubic1d(q(-1), q(0), q(1), q(2), x) - q(x)) <= 1e-12);
    }
  }
  SUBCASE("a pure cubic is not reproduced") {
    auto cube = [](double t) { return t * t * t; };
    // Catmull-Rom gives 7/64 at 1/4 for samples of x^3; the cubic itself is 1/64
    CHECK(cubic1d(cube(-1), cube(0), cube(1), cube(2), 0.25) == doctest::Approx(7.0 / 64.0).epsilon(1e-14));
  }
}

TEST_CASE("bicubic sampling") {
  std::mt19937_64 rng(22);
  const Image u = oracle::randomImage(8, 9, rng);
  CHECK(bicubicSample(u, 2.0, 3.0).value() == u.at(2, 3));
  const auto ramp = [] {
    Image r(6, 7);
    for (int j = 0; j < 7; ++j)
      for (int i = 0; i < 6; ++i) r.at(i, j) = 2 * i + 3 * j;
    return r;
  }();
  CHECK(bicubicSample(ramp, 1.5, 2.5).value() == doctest::Approx(10.5).epsilon(1e-14));

  std::uniform_real_distribution<double> pos(1.0, 5.99);
  for (int k = 0; k < 100; ++k) {
    const double x = pos(rng), y = pos(rng);
    const double s = *bicubicSample(Image(8, 9, 0.37), x, y);
    CHECK(s == doctest::Approx(0.37).epsilon(1e-14));
    const double y2 = std::min(y, 5.99);
    CHECK(*bicubicSample(u, x, y2) == doctest::Approx(oracle::bicubic(u, x, y2)).epsilon(1e-13));
  }

  SUBCASE("domain rule") {
    CHECK_FALSE(bicubicSample(u, 0.5, 3.0).has_value());  // i0 = -1
    CHECK(bicubicSample(u, 1.0, 3.0).has_value());
    CHECK(bicubicSample(u, 5.99, 3.0).has_value());       // i3 = 7, the last column
    CHECK_FALSE(bicubicSample(u, 6.0, 3.0).has_value());  // i3 = 8
    CHECK(bicubicSample(u, 3.0, 6.5).has_value());        // j3 = 8, the last row
    CHECK_FALSE(bicubicSample(u, 3.0, 7.0).has_value());  // j3 = 9
    CHECK_FALSE(bicubicSample(u, -0.2, 3.0).has_value());  // floor toward -infinity
    CHECK_FALSE(bicubicSample(u, 1e300, 3.0).has_value());
    CHECK_THROWS_AS(bicubicSample(u, std::nan(""), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(bicubicSample(u, 2.0, std::numeric_limits<double>::infinity()), std::invalid_argument);
  }
  SUBCASE("clamped variant agrees in the interior and stays finite outside") {
    CHECK(bicubicSampleClamped(u, 3.25, 4.5) == *bicubicSample(u, 3.25, 4.5));
    CHECK(bicubicSampleClamped(Image(8, 9, 0.5), 0.2, 8.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::isfinite(bicubicSampleClamped(u, -3.0, 20.0)));
  }
}

TEST_CASE("bicubic resampling") {
  std::mt19937_64 rng(23);
  const Image u = oracle::randomImage(9, 7, rng);
  const auto same = resampleBicubic(u, 9, 7);
  for (std::size_t p = 0; p < u.size(); ++p) CHECK(std::abs(same[p] - u[p]) <= 1e-12);
  for (auto [w, h] : {std::pair{3, 4}, {13, 2}, {1, 1}, {20, 17}}) {
    const auto r = resampleBicubic(Image(9, 7, 0.6), w, h);
    CHECK(r.width() == w);
    CHECK(r.height() == h);
    for (double x : r.values()) CHECK(x == doctest::Approx(0.6).epsilon(1e-12));
  }
  jointflow::SynthSpec spec;
  spec.width = spec.height = 32;
  spec.blobs = {{15.5, 15.5, 5.0, 1.0}};
  const Image blob = renderSequence(spec).frames.frames[0];
  const auto round = resampleBicubic(resampleBicubic(blob, 16, 16), 32, 32);
  double err = 0;
  for (std::size_t p = 0; p < blob.size(); ++p) err = std::max(err, std::abs(round[p] - blob[p]));
  CHECK(err <= 0.05);
  CHECK_THROWS(resampleBicubic(u, 0, 3));
}

TEST_CASE("gaussian smoothing") {
  std::mt19937_64 rng(24);
  const Image u = oracle::randomImage(7, 6, rng);
  CHECK(gaussianSmooth(u, 0.0) == u);
  const auto flat = gaussianSmooth(Image(7, 6, 0.25), 1.7);
  for (double x : flat.values()) CHECK(x == doctest::Approx(0.25).epsilon(1e-12));

  const auto k = gaussianKernel(1.0);
  REQUIRE(k.size() == 7);
  double s = 0;
  for (int t = -3; t <= 3; ++t) s += std::exp(-0.5 * t * t);
  CHECK(k[3] == doctest::Approx(1.0 / s).epsilon(1e-14));

  Image impulse(15, 15);
  impulse.at(7, 7) = 1.0;
  const auto g = gaussianSmooth(impulse, 1.0);
  CHECK(g.at(7, 7) == doctest::Approx(k[3] * k[3]).epsilon(1e-14));
  CHECK(g.at(7, 7) == doctest::Approx(0.1592).epsilon(1e-3));
  CHECK(g.at(9, 6) == doctest::Approx(k[5] * k[2]).epsilon(1e-14));
  CHECK_THROWS(gaussianSmooth(u, -1.0));
}

TEST_CASE("median filter") {
  CHECK(medianFilter(Image(6, 5, 0.4), 5) == Image(6, 5, 0.4));
  Image spike(8, 8, 0.2);
  spike.at(3, 4) = 9.0;
  const auto cleaned = medianFilter(spike, 5);
  for (double x : cleaned.values()) CHECK(x == 0.2);

  const Image nine(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto m = medianFilter(nine, 3);
  CHECK(m.at(1, 1) == 5.0);
  CHECK(m.at(0, 0) == 3.0);  // clipped window {1, 2, 4, 5}: mean of the middle pair

  std::mt19937_64 rng(25);
  const Image r = oracle::randomImage(10, 9, rng);
  double maxIn = 0, maxOut = 0;
  for (double x : r.values()) maxIn = std::max(maxIn, std::abs(x));
  const auto filtered = medianFilter(r, 5);
  for (double x : filtered.values()) maxOut = std::max(maxOut, std::abs(x));
  CHECK(maxOut <= maxIn);

  SUBCASE("binary stripe images are fixed points, hence idempotent") {
    Image stripes(12, 10);
    for (int j = 0; j < 10; ++j)
      for (int i = 0; i < 12; ++i) stripes.at(i, j) = (i / 4) % 2;
    const auto once = medianFilter(stripes, 5);
    CHECK(once == stripes);
    CHECK(medianFilter(once, 5) == once);
  }
  CHECK_THROWS_AS(medianFilter(r, 4), std::invalid_argument);
  CHECK_THROWS_AS(medianFilter(r, 0), std::invalid_argument);
}

TEST_CASE("pyramid sizes") {
  const auto s = buildPyramidSizes(100, 80, 0.8, 10);
  REQUIRE(s.size() == 10);
  CHECK(s.front() == LevelSize{100, 80});
  CHECK(s.back() == LevelSize{13, 11});
  for (std::size_t k = 1; k < s.size(); ++k) {
    CHECK(s[k].width < s[k - 1].width);
    CHECK(s[k].height < s[k - 1].height);
  }
  CHECK(buildPyramidSizes(12, 12, 0.8, 10).size() == 1);
  CHECK(buildPyramidSizes(6, 40, 0.8, 10).size() == 1);
  CHECK(buildPyramidSizes(64, 64, 0.8, 10).back().width >= 10);
}
