#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "jointflow/config.hpp"
#include "jointflow/config_io.hpp"
#include "jointflow/energy.hpp"
#include "jointflow/interpolation.hpp"
#include "jointflow/sparse.hpp"
#include "oracles.hpp"

using namespace jointflow;

TEST_CASE("image indexing is row-major with i horizontal") {
  Image u(3, 2);
  u.at(2, 1) = 5.0;
  CHECK(u[5] == 5.0);
  CHECK(u.index(1, 1) == 4);
  CHECK(u.allFinite());
  u.at(0, 0) = std::nan("");
  CHECK_FALSE(u.allFinite());
  CHECK_THROWS(Image(2, 2, std::vector<double>(3)));
}

TEST_CASE("sequences validate, stack and unstack") {
  ImageSequence s;
  s.frames = {Image(2, 2, 1.0), Image(2, 2, 2.0)};
  CHECK_NOTHROW(s.validate());
  const auto st = s.stacked();
  REQUIRE(st.size() == 8);
  CHECK(st[3] == 1.0);
  CHECK(st[4] == 2.0);
  CHECK(ImageSequence::fromStacked(st, 2, 2, 2) == s);
  s.frames.push_back(Image(3, 2));
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_THROWS_AS(ImageSequence{}.validate(), std::invalid_argument);

  const auto z = FlowSequence::zeros(3, 4, 2);
  CHECK(z.count() == 3);
  CHECK(z.stacked().size() == 3 * 2 * 8);
}

TEST_CASE("sparse operator assembly") {
  SUBCASE("duplicates sum, zeros and tiny entries drop, columns sorted") {
    const auto K = SparseOperator::fromTriplets(2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 0.5}, {1, 1, 1e-16}, {1, 0, 0.0}},
                                                1e-14);
    CHECK(K.nonZeros() == 2);
    CHECK(K.colIndex()[0] == 0);
    CHECK(K.colIndex()[1] == 2);
    CHECK(K.values()[1] == doctest::Approx(1.5));
    CHECK(K.rowNonZeros(1) == 0);
  }
  SUBCASE("out-of-range triplets are rejected") {
    CHECK_THROWS(SparseOperator::fromTriplets(2, 2, {{2, 0, 1.0}}));
  }
  SUBCASE("identity and dense round trip") {
    const std::vector<double> dense = {1, 0, -2, 0, 3, 4};
    const auto K = SparseOperator::fromDense(2, 3, dense);
    CHECK(K.toDense() == dense);
    const auto I = SparseOperator::identity(4);
    const std::vector<double> x = {1, 2, 3, 4};
    CHECK(I.apply(x) == x);
    CHECK(rowAbsSums(I) == std::vector<double>(4, 1.0));
  }
  SUBCASE("apply, transpose and abs sums against a dense oracle") {
    std::mt19937_64 rng(1);
    const std::size_t r = 5, c = 7;
    auto dense = oracle::randomVector(r * c, rng);
    for (std::size_t k = 0; k < dense.size(); k += 3) dense[k] = 0.0;
    const auto K = SparseOperator::fromDense(r, c, dense);
    const auto x = oracle::randomVector(c, rng), y = oracle::randomVector(r, rng);
    const auto Kx = K.apply(x), Kty = K.applyTranspose(y);
    const auto rows = rowAbsSums(K), cols = K.colAbsSums();
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0, a = 0;
      for (std::size_t j = 0; j < c; ++j) {
        s += dense[i * c + j] * x[j];
        a += std::abs(dense[i * c + j]);
      }
      CHECK(Kx[i] == doctest::Approx(s).epsilon(1e-12));
      CHECK(rows[i] == doctest::Approx(a).epsilon(1e-12));
    }
    for (std::size_t j = 0; j < c; ++j) {
      double s = 0, a = 0;
      for (std::size_t i = 0; i < r; ++i) {
        s += dense[i * c + j] * y[i];
        a += std::abs(dense[i * c + j]);
      }
      CHECK(Kty[j] == doctest::Approx(s).epsilon(1e-12));
      CHECK(cols[j] == doctest::Approx(a).epsilon(1e-12));
    }
    std::vector<double> acc(c, 1.0);
    K.addTransposed(y, acc, 2.0);
    for (std::size_t j = 0; j < c; ++j) CHECK(acc[j] == doctest::Approx(1.0 + 2.0 * Kty[j]));
  }
  SUBCASE("block diagonal places copies on the diagonal") {
    const auto K = SparseOperator::fromDense(1, 2, std::vector<double>{1.0, 2.0});
    const auto B = blockDiagonal(K, 3);
    CHECK(B.rows() == 3);
    CHECK(B.cols() == 6);
    const auto d = B.toDense();
    CHECK(d[1 * 6 + 2] == 1.0);
    CHECK(d[2 * 6 + 5] == 2.0);
    CHECK(d[0 * 6 + 2] == 0.0);
  }
}

namespace {

// term-by-term energy with the bicubic warp written out independently
EnergyTerms oracleEnergy(const ImageSequence& u, const FlowSequence& v, const ImageSequence& f, const SolveConfig& cfg) {
  EnergyTerms t;
  const int w = u.width(), h = u.height();
  auto tv = [&](const Image& img) {
    std::vector<double> gx, gy;
    oracle::grad(img.values(), w, h, gx, gy);
    double s = 0;
    for (std::size_t p = 0; p < gx.size(); ++p) s += std::hypot(gx[p], gy[p]);
    return s;
  };
  for (std::size_t i = 0; i < u.frames.size(); ++i) {
    for (std::size_t p = 0; p < u.frames[i].size(); ++p)
      t.data += 0.5 * (u.frames[i][p] - f.frames[i][p]) * (u.frames[i][p] - f.frames[i][p]);
    t.imageTV += cfg.alpha * tv(u.frames[i]);
  }
  for (std::size_t i = 0; i + 1 < u.frames.size(); ++i) {
    for (int j = 0; j < h; ++j)
      for (int k = 0; k < w; ++k) {
        const double s = oracle::bicubic(u.frames[i + 1], k + v.fields[i].v1.at(k, j), j + v.fields[i].v2.at(k, j));
        if (!std::isnan(s)) t.coupling += cfg.gamma * std::abs(s - u.frames[i].at(k, j));
      }
    t.flowTV += cfg.beta * (tv(v.fields[i].v1) + tv(v.fields[i].v2));
  }
  return t;
}

}  // namespace

TEST_CASE("joint energy") {
  const SolveConfig cfg;
  const auto I = [](int w, int h) { return buildForwardOperator(OperatorKind::Identity, w, h); };

  SUBCASE("constant sequence with zero flow has zero energy") {
    ImageSequence u;
    u.frames = {Image(4, 4, 0.3), Image(4, 4, 0.3), Image(4, 4, 0.3)};
    CHECK(jointEnergy(u, FlowSequence::zeros(2, 4, 4), u, I(4, 4), cfg) == 0.0);
  }
  SUBCASE("2x2 pair with u1 = u2, v = 0, f = u is zero") {
    ImageSequence u;
    u.frames = {Image(2, 2, {0.1, 0.2, 0.3, 0.4}), Image(2, 2, {0.1, 0.2, 0.3, 0.4})};
    const auto t = jointEnergyTerms(u, FlowSequence::zeros(1, 2, 2), u, I(2, 2), cfg);
    CHECK(t.data == 0.0);
    CHECK(t.coupling == 0.0);
    CHECK(t.flowTV == 0.0);
    // the image TV of a non-constant frame is not zero; the model only vanishes for constant frames
    CHECK(t.imageTV > 0.0);
  }
  SUBCASE("3x3 grids admit no in-domain bicubic stencil, so coupling vanishes") {
    ImageSequence u;
    u.frames = {Image(3, 3, {0, 1, 0, 0, 1, 0, 0, 1, 0}), Image(3, 3, {0, 0, 1, 0, 0, 1, 0, 0, 1})};
    FlowSequence v = FlowSequence::zeros(1, 3, 3);
    CHECK(jointEnergyTerms(u, v, u, I(3, 3), cfg).coupling == 0.0);
  }
  SUBCASE("true shift beats zero flow and matches the oracle") {
    const int w = 10, h = 8;
    Image a(w, h), b(w, h);
    for (int j = 0; j < h; ++j)
      for (int i = 0; i < w; ++i) {
        a.at(i, j) = std::sin(0.7 * i) + 0.3 * std::cos(0.5 * j);
        b.at(i, j) = std::sin(0.7 * (i - 1)) + 0.3 * std::cos(0.5 * j);  // b(x + 1) = a(x)
      }
    ImageSequence u;
    u.frames = {a, b};
    FlowSequence zero = FlowSequence::zeros(1, w, h), shift = zero;
    for (auto& x : shift.fields[0].v1.data()) x = 1.0;
    const auto e0 = jointEnergyTerms(u, zero, u, I(w, h), cfg);
    const auto e1 = jointEnergyTerms(u, shift, u, I(w, h), cfg);
    CHECK(e1.total() < e0.total());
    CHECK(e1.coupling < 1e-12);
    for (const auto* v : {&zero, &shift}) {
      const auto lib = jointEnergyTerms(u, *v, u, I(w, h), cfg);
      const auto ref = oracleEnergy(u, *v, u, cfg);
      CHECK(lib.data == doctest::Approx(ref.data).epsilon(1e-12));
      CHECK(lib.imageTV == doctest::Approx(ref.imageTV).epsilon(1e-12));
      CHECK(lib.coupling == doctest::Approx(ref.coupling).epsilon(1e-12));
      CHECK(lib.flowTV == doctest::Approx(ref.flowTV).epsilon(1e-12));
    }
  }
  SUBCASE("random inputs: non-negative and equal to the oracle") {
    std::mt19937_64 rng(7);
    ImageSequence u, f;
    FlowSequence v;
    for (int k = 0; k < 3; ++k) {
      u.frames.push_back(oracle::randomImage(9, 7, rng));
      f.frames.push_back(oracle::randomImage(9, 7, rng));
    }
    for (int k = 0; k < 2; ++k) v.fields.push_back(oracle::smoothFlow(9, 7, 1.5, rng));
    const auto lib = jointEnergyTerms(u, v, f, I(9, 7), cfg);
    const auto ref = oracleEnergy(u, v, f, cfg);
    CHECK(lib.total() >= 0.0);
    CHECK(lib.total() == doctest::Approx(ref.total()).epsilon(1e-12));
  }
  SUBCASE("errors") {
    ImageSequence u;
    u.frames = {Image(4, 4), Image(4, 4)};
    CHECK_THROWS_AS(jointEnergy(u, FlowSequence::zeros(2, 4, 4), u, I(4, 4), cfg), std::invalid_argument);
    CHECK_THROWS_AS(jointEnergy(u, FlowSequence::zeros(1, 3, 4), u, I(4, 4), cfg), std::invalid_argument);
    u.frames[0].at(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS(jointEnergy(u, FlowSequence::zeros(1, 4, 4), u, I(4, 4), cfg));
  }
}

TEST_CASE("normalization") {
  SUBCASE("0..255 maps to 0..1") {
    std::vector<double> vals(256);
    for (int k = 0; k < 256; ++k) vals[k] = k;
    ImageSequence s;
    s.frames = {Image(16, 16, vals)};
    const auto n = normalizeSequence(s);
    CHECK(n.scale == 255.0);
    CHECK(n.offset == 0.0);
    CHECK(n.sequence.frames[0][255] == 1.0);
    CHECK(n.sequence.frames[0][51] == doctest::Approx(0.2));
  }
  SUBCASE("constant sequence maps to zeros") {
    ImageSequence s;
    s.frames = {Image(2, 2, 7.0), Image(2, 2, 7.0)};
    const auto n = normalizeSequence(s);
    CHECK(n.scale == 1.0);
    CHECK(n.offset == 7.0);
    for (const auto& fr : n.sequence.frames)
      for (double x : fr.values()) CHECK(x == 0.0);
  }
  SUBCASE("{-1, 3} and round trip") {
    ImageSequence s;
    s.frames = {Image(2, 1, {-1.0, 3.0}), Image(2, 1, {0.5, 2.0})};
    const auto n = normalizeSequence(s);
    CHECK(n.scale == 4.0);
    CHECK(n.offset == -1.0);
    CHECK(n.sequence.frames[0][0] == 0.0);
    CHECK(n.sequence.frames[0][1] == 1.0);
    const auto back = denormalizeSequence(n.sequence, n.scale, n.offset);
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t p = 0; p < 2; ++p)
        CHECK(std::abs(back.frames[k][p] - s.frames[k][p]) <= 1e-12 * (1 + std::abs(s.frames[k][p])));
  }
}

TEST_CASE("config defaults and validation") {
  const SolveConfig c;
  CHECK(c.eta == 0.8);
  CHECK(c.nWarps == 3);
  CHECK(c.sizeMed == 5);
  CHECK(c.epsU == 1e-6);
  CHECK(c.epsV == 1e-6);
  CHECK(c.epsMain == 1e-5);
  CHECK(c.nRes == 100);
  CHECK(c.iterMainMax == 10);
  CHECK(c.minScaleDim == 10);
  CHECK(c.gamma == 1.0);
  CHECK(c.alpha == 0.02);
  CHECK(c.flowWeight() == doctest::Approx(0.02));
  CHECK(c.sigmaD == doctest::Approx(defaultPyramidSigma(0.8)).epsilon(1e-12));
  CHECK_NOTHROW(c.validate());

  auto bad = [](auto mutate) {
    SolveConfig x;
    mutate(x);
    CHECK_THROWS_AS(x.validate(), std::invalid_argument);
  };
  bad([](SolveConfig& x) { x.eta = 1.0; });
  bad([](SolveConfig& x) { x.eta = 0.0; });
  bad([](SolveConfig& x) { x.sizeMed = 4; });
  bad([](SolveConfig& x) { x.nWarps = 0; });
  bad([](SolveConfig& x) { x.alpha = -1.0; });
  bad([](SolveConfig& x) { x.operatorKind = OperatorKind::Mask; });
  bad([](SolveConfig& x) { x.iterMainMax = 0; });
}

TEST_CASE("config serialization round-trips") {
  SolveConfig c;
  c.alpha = 0.05;
  c.beta = 0.1;
  c.gamma = 2.0;
  c.operatorKind = OperatorKind::Subsample;
  c.subsampleFactor = 3;
  c.init = InitKind::SmoothTime;
  c.timeContinuous = true;
  c.maskPath = "m.pgm";
  CHECK(configFromJson(configToJson(c)) == c);
  CHECK(parseConfigText(configToJson(c).dump(2)) == c);

  const auto kv = parseConfigText("# comment\nalpha = 0.5\noperator = blur   # trailing\ntimeContinuous = true\n");
  CHECK(kv.alpha == 0.5);
  CHECK((kv.operatorKind == OperatorKind::Blur));
  CHECK(kv.timeContinuous);
  CHECK(kv.beta == SolveConfig{}.beta);

  CHECK_THROWS_AS(parseConfigText("bogus = 1"), std::invalid_argument);
  CHECK_THROWS_AS(parseConfigText("alpha = fast"), std::invalid_argument);
  CHECK_THROWS_AS(parseConfigText("{\"operator\": \"radon\"}"), std::invalid_argument);
  CHECK_THROWS_AS(parseConfigText("alpha"), std::invalid_argument);
  for (auto k : {OperatorKind::Identity, OperatorKind::Mask, OperatorKind::Subsample, OperatorKind::Blur})
    CHECK((parseOperatorKind(toString(k)) == k));
  CHECK((parseInitKind("smooth") == InitKind::SmoothTime));
}
