#include "jointflow/flow_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jointflow/interpolation.hpp"

namespace jointflow {

namespace {

constexpr double kStepGuard = 1e-9;

// Central differences in the interior, one-sided on the border columns/rows.
GradientField centralDerivatives(const Image& u) {
  const int w = u.width();
  const int h = u.height();
  GradientField g{Image(w, h), Image(w, h)};
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      const int il = std::max(i - 1, 0);
      const int ir = std::min(i + 1, w - 1);
      const int jd = std::max(j - 1, 0);
      const int ju = std::min(j + 1, h - 1);
      g.gx.at(i, j) = ir > il ? (u.at(ir, j) - u.at(il, j)) / (ir - il) : 0.0;
      g.gy.at(i, j) = ju > jd ? (u.at(i, ju) - u.at(i, jd)) / (ju - jd) : 0.0;
    }
  return g;
}

double divergenceAt(const double* gx, const double* gy, std::size_t p, int i, int j, int w, int h) {
  double d = 0.0;
  if (i + 1 < w) d += gx[p];
  if (i > 0) d -= gx[p - 1];
  if (j + 1 < h) d += gy[p];
  if (j > 0) d -= gy[p - static_cast<std::size_t>(w)];
  return d;
}

void checkLinearization(const WarpLinearization& lin, const FlowField& v) {
  if (v.width() != lin.width() || v.height() != lin.height()) {
    throw std::invalid_argument("flow solver: flow and linearization shapes differ");
  }
}

bool finite(const Image& a) { return a.allFinite(); }

}  // namespace

WarpLinearization linearize(const Image& u1, const Image& u2, const FlowField& vtilde) {
  if (!u1.sameShape(u2) || vtilde.width() != u1.width() || vtilde.height() != u1.height()) {
    throw std::invalid_argument("linearize: frame and flow shapes differ");
  }
  const int w = u1.width();
  const int h = u1.height();
  const auto d = centralDerivatives(u2);
  WarpLinearization lin{Image(w, h), Image(w, h), Image(w, h), Image(w, h),
                        std::vector<std::uint8_t>(u1.size(), 0)};
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      const std::size_t p = u1.index(i, j);
      const double a = vtilde.v1[p];
      const double b = vtilde.v2[p];
      const auto s = bicubicStencil(w, h, i + a, j + b);
      if (!s) continue;
      const auto wx = cubicWeights(s->fx);
      const auto wy = cubicWeights(s->fy);
      double val = 0.0, dx = 0.0, dy = 0.0;
      for (int l = 0; l < 4; ++l)
        for (int k = 0; k < 4; ++k) {
          const double wt = wx[k] * wy[l];
          const std::size_t q = u1.index(s->i0 + k, s->j0 + l);
          val += wt * u2[q];
          dx += wt * d.gx[q];
          dy += wt * d.gy[q];
        }
      lin.valid[p] = 1;
      lin.utilde[p] = val;
      lin.gx[p] = dx;
      lin.gy[p] = dy;
      lin.ut[p] = -(a * dx + b * dy) + val - u1[p];
    }
  return lin;
}

WarpLinearization linearizeClassical(const Image& u1, const Image& u2) {
  if (!u1.sameShape(u2)) throw std::invalid_argument("linearizeClassical: frame shapes differ");
  const auto g = gradient(u2);
  WarpLinearization lin{u2, g.gx, g.gy, Image(u1.width(), u1.height()), std::vector<std::uint8_t>(u1.size(), 1)};
  for (std::size_t p = 0; p < u1.size(); ++p) lin.ut[p] = u2[p] - u1[p];
  return lin;
}

FlowDualState FlowDualState::zeros(int width, int height) {
  return {GradientField{Image(width, height), Image(width, height)},
          GradientField{Image(width, height), Image(width, height)}, Image(width, height)};
}

FlowSteps makeFlowSteps(const WarpLinearization& lin) {
  const std::size_t n = lin.utilde.size();
  FlowSteps s;
  s.sigma3.assign(n, 0.0);
  s.tau1.resize(n);
  s.tau2.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double ax = std::abs(lin.gx[p]);
    const double ay = std::abs(lin.gy[p]);
    if (lin.valid[p]) s.sigma3[p] = 1.0 / (ax + ay + kStepGuard);
    s.tau1[p] = 1.0 / (4.0 + ax + kStepGuard);
    s.tau2[p] = 1.0 / (4.0 + ay + kStepGuard);
  }
  return s;
}

double flowResidual(const FlowIterate& prev, const FlowIterate& curr, const WarpLinearization& lin,
                    const FlowSteps& steps) {
  checkLinearization(lin, prev.v);
  checkLinearization(lin, curr.v);
  const int w = lin.width();
  const int h = lin.height();
  const std::size_t n = lin.utilde.size();

  // dy = y^{k+1} - y^k, dv = v^k - v^{k+1}
  std::vector<double> d1x(n), d1y(n), d2x(n), d2y(n), dy3(n), dv1(n), dv2(n);
  for (std::size_t p = 0; p < n; ++p) {
    d1x[p] = curr.dual.y1.gx[p] - prev.dual.y1.gx[p];
    d1y[p] = curr.dual.y1.gy[p] - prev.dual.y1.gy[p];
    d2x[p] = curr.dual.y2.gx[p] - prev.dual.y2.gx[p];
    d2y[p] = curr.dual.y2.gy[p] - prev.dual.y2.gy[p];
    dy3[p] = curr.dual.y3[p] - prev.dual.y3[p];
    dv1[p] = prev.v.v1[p] - curr.v.v1[p];
    dv2[p] = prev.v.v2[p] - curr.v.v2[p];
  }

  double p1 = 0.0, p2 = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * w + i;
      // grad^T y = -div y
      const double gt1 = -divergenceAt(d1x.data(), d1y.data(), p, i, j, w, h);
      const double gt2 = -divergenceAt(d2x.data(), d2y.data(), p, i, j, w, h);
      p1 += std::abs(dv1[p] / steps.tau1[p] - gt1 - lin.gx[p] * dy3[p]);
      p2 += std::abs(dv2[p] / steps.tau2[p] - gt2 - lin.gy[p] * dy3[p]);

      const double g1x = i + 1 < w ? dv1[p + 1] - dv1[p] : 0.0;
      const double g1y = j + 1 < h ? dv1[p + w] - dv1[p] : 0.0;
      const double g2x = i + 1 < w ? dv2[p + 1] - dv2[p] : 0.0;
      const double g2y = j + 1 < h ? dv2[p + w] - dv2[p] : 0.0;
      d1 += std::abs(-d1x[p] / steps.sigma1 - g1x) + std::abs(-d1y[p] / steps.sigma1 - g1y);
      d2 += std::abs(-d2x[p] / steps.sigma2 - g2x) + std::abs(-d2y[p] / steps.sigma2 - g2y);

      if (steps.sigma3[p] > 0.0) {
        d3 += std::abs(-dy3[p] / steps.sigma3[p] - (lin.gx[p] * dv1[p] + lin.gy[p] * dv2[p]));
      }
    }
  const double nn = static_cast<double>(n);
  return p1 / nn + p2 / nn + d1 / (2.0 * nn) + d2 / (2.0 * nn) + d3 / nn;
}

FlowLevelResult solveFlowLevel(const WarpLinearization& lin, const FlowIterate& init, const FlowLevelParams& params,
                               const IterationLog& log) {
  checkLinearization(lin, init.v);
  if (!(params.weight > 0.0)) throw std::invalid_argument("solveFlowLevel: weight must be > 0");
  if (params.nRes < 1 || params.maxIterations < 1) throw std::invalid_argument("solveFlowLevel: bad iteration limits");

  const int w = lin.width();
  const int h = lin.height();
  const std::size_t n = lin.utilde.size();
  const auto steps = makeFlowSteps(lin);
  const double s1 = steps.sigma1;
  const double s2 = steps.sigma2;
  const double radius = params.weight;

  FlowLevelResult result;
  FlowIterate& cur = result.state;
  cur = init;
  // the data dual carries no information where the warp is undefined
  for (std::size_t p = 0; p < n; ++p)
    if (!lin.valid[p]) cur.dual.y3[p] = 0.0;

  double* v1 = cur.v.v1.data().data();
  double* v2 = cur.v.v2.data().data();
  double* y1x = cur.dual.y1.gx.data().data();
  double* y1y = cur.dual.y1.gy.data().data();
  double* y2x = cur.dual.y2.gx.data().data();
  double* y2y = cur.dual.y2.gy.data().data();
  double* y3 = cur.dual.y3.data().data();
  const double* gx = lin.gx.data().data();
  const double* gy = lin.gy.data().data();
  const double* ut = lin.ut.data().data();
  std::vector<double> vb1(v1, v1 + n), vb2(v2, v2 + n);

  FlowIterate prev;
  for (int k = 1; k <= params.maxIterations; ++k) {
    const bool check = k % params.nRes == 0 || k == params.maxIterations;
    if (check) prev = cur;

    for (int j = 0; j < h; ++j)
      for (int i = 0; i < w; ++i) {
        const std::size_t p = static_cast<std::size_t>(j) * w + i;
        const bool right = i + 1 < w;
        const bool down = j + 1 < h;
        double ax = y1x[p] + s1 * (right ? vb1[p + 1] - vb1[p] : 0.0);
        double ay = y1y[p] + s1 * (down ? vb1[p + w] - vb1[p] : 0.0);
        double scale = std::max(1.0, std::sqrt(ax * ax + ay * ay) / radius);
        y1x[p] = ax / scale;
        y1y[p] = ay / scale;

        ax = y2x[p] + s2 * (right ? vb2[p + 1] - vb2[p] : 0.0);
        ay = y2y[p] + s2 * (down ? vb2[p + w] - vb2[p] : 0.0);
        scale = std::max(1.0, std::sqrt(ax * ax + ay * ay) / radius);
        y2x[p] = ax / scale;
        y2y[p] = ay / scale;

        if (lin.valid[p]) {
          y3[p] = std::clamp(y3[p] + steps.sigma3[p] * (gx[p] * vb1[p] + gy[p] * vb2[p] + ut[p]), -1.0, 1.0);
        }
      }

    for (int j = 0; j < h; ++j)
      for (int i = 0; i < w; ++i) {
        const std::size_t p = static_cast<std::size_t>(j) * w + i;
        const double div1 = divergenceAt(y1x, y1y, p, i, j, w, h);
        const double div2 = divergenceAt(y2x, y2y, p, i, j, w, h);
        const double n1 = v1[p] - steps.tau1[p] * (-div1 + gx[p] * y3[p]);
        const double n2 = v2[p] - steps.tau2[p] * (-div2 + gy[p] * y3[p]);
        vb1[p] = 2.0 * n1 - v1[p];
        vb2[p] = 2.0 * n2 - v2[p];
        v1[p] = n1;
        v2[p] = n2;
      }

    result.iterations = k;
    if (check) {
      if (!finite(cur.v.v1) || !finite(cur.v.v2) || !finite(cur.dual.y3)) {
        throw SolverError("flow solver: non-finite iterate", k);
      }
      result.residual = flowResidual(prev, cur, lin, steps);
      if (log) log(k, result.residual);
      if (result.residual <= params.eps) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

double flowLevelEnergy(const WarpLinearization& lin, const FlowField& v, double weight) {
  checkLinearization(lin, v);
  double data = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p)
    if (lin.valid[p]) data += std::abs(lin.gx[p] * v.v1[p] + lin.gy[p] * v.v2[p] + lin.ut[p]);
  double tv = 0.0;
  for (const Image* c : {&v.v1, &v.v2}) {
    const auto g = gradient(*c);
    for (std::size_t p = 0; p < v.size(); ++p) tv += std::hypot(g.gx[p], g.gy[p]);
  }
  return data + weight * tv;
}

int FlowSolveStats::totalIterations() const {
  int total = 0;
  for (const auto& s : solves) total += s.iterations;
  return total;
}

bool FlowSolveStats::allConverged() const {
  return std::all_of(solves.begin(), solves.end(), [](const Solve& s) { return s.converged; });
}

namespace {

FlowField medianFilterFlow(const FlowField& v, int size) {
  return FlowField(medianFilter(v.v1, size), medianFilter(v.v2, size));
}

GradientField resampleField(const GradientField& g, int w, int h) {
  return {resampleBicubic(g.gx, w, h), resampleBicubic(g.gy, w, h)};
}

double gridRatio(int fine, int coarse, double eta) {
  return coarse > 1 ? static_cast<double>(fine - 1) / static_cast<double>(coarse - 1) : 1.0 / eta;
}

}  // namespace

FlowSolveResult solveFlowPyramid(const Image& u1, const Image& u2, const SolveConfig& cfg, const IterationLog& log) {
  if (!u1.sameShape(u2) || u1.empty()) throw std::invalid_argument("solveFlowPyramid: frames must share a shape");
  FlowLevelParams params{cfg.flowWeight(), cfg.epsV, cfg.nRes, cfg.flowMaxIterations};
  FlowSolveResult out;

  if (cfg.timeContinuous) {
    const auto lin = linearizeClassical(u1, u2);
    FlowIterate init{FlowField(u1.width(), u1.height()), FlowDualState::zeros(u1.width(), u1.height())};
    auto r = solveFlowLevel(lin, init, params, log);
    out.flow = medianFilterFlow(r.state.v, cfg.sizeMed);
    out.stats.solves.push_back({0, 0, u1.width(), u1.height(), r.iterations, r.residual, r.converged});
    return out;
  }

  const auto sizes = buildPyramidSizes(u1.width(), u1.height(), cfg.eta, cfg.minScaleDim);
  std::vector<Image> pyr1{u1}, pyr2{u2};
  for (std::size_t s = 1; s < sizes.size(); ++s) {
    pyr1.push_back(resampleBicubic(gaussianSmooth(pyr1.back(), cfg.sigmaD), sizes[s].width, sizes[s].height));
    pyr2.push_back(resampleBicubic(gaussianSmooth(pyr2.back(), cfg.sigmaD), sizes[s].width, sizes[s].height));
  }

  const int coarsest = static_cast<int>(sizes.size()) - 1;
  FlowIterate state{FlowField(sizes.back().width, sizes.back().height),
                    FlowDualState::zeros(sizes.back().width, sizes.back().height)};

  for (int s = coarsest; s >= 0; --s) {
    const int w = sizes[s].width;
    const int h = sizes[s].height;
    if (s < coarsest) {
      const double rx = gridRatio(w, sizes[s + 1].width, cfg.eta);
      const double ry = gridRatio(h, sizes[s + 1].height, cfg.eta);
      Image v1 = resampleBicubic(state.v.v1, w, h);
      Image v2 = resampleBicubic(state.v.v2, w, h);
      for (auto& x : v1.data()) x *= rx;
      for (auto& x : v2.data()) x *= ry;
      state.v = FlowField(std::move(v1), std::move(v2));
      state.dual.y1 = resampleField(state.dual.y1, w, h);
      state.dual.y2 = resampleField(state.dual.y2, w, h);
      state.dual.y3 = resampleBicubic(state.dual.y3, w, h);
    }
    for (int warp = 0; warp < cfg.nWarps; ++warp) {
      const auto lin = linearize(pyr1[s], pyr2[s], state.v);
      auto r = solveFlowLevel(lin, state, params, log);
      out.stats.solves.push_back({s, warp, w, h, r.iterations, r.residual, r.converged});
      state.dual = std::move(r.state.dual);
      state.v = medianFilterFlow(r.state.v, cfg.sizeMed);
    }
  }
  out.flow = std::move(state.v);
  return out;
}

}  // namespace jointflow
