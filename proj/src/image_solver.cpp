#include "jointflow/image_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jointflow/warp.hpp"

namespace jointflow {

namespace {

constexpr double kStepGuard = 1e-9;

// D^T y for forward temporal differences (u^{t+1} - u^t), accumulated into out.
void addTemporalTranspose(std::span<const double> y, std::size_t frames, std::size_t n, std::span<double> out,
                          double scale) {
  for (std::size_t t = 0; t + 1 < frames; ++t) {
    const double* yt = y.data() + t * n;
    double* lo = out.data() + t * n;
    double* hi = out.data() + (t + 1) * n;
    for (std::size_t p = 0; p < n; ++p) {
      lo[p] -= scale * yt[p];
      hi[p] += scale * yt[p];
    }
  }
}

void temporalDifference(std::span<const double> u, std::size_t frames, std::size_t n, std::span<double> out) {
  for (std::size_t t = 0; t + 1 < frames; ++t)
    for (std::size_t p = 0; p < n; ++p) out[t * n + p] = u[(t + 1) * n + p] - u[t * n + p];
}

void resizeOrZero(std::vector<double>& v, std::size_t size) {
  if (v.size() != size) v.assign(size, 0.0);
}

}  // namespace

ImageProblem makeImageProblem(const ImageSequence& f, const ForwardOperator& op, double alpha, double gamma,
                              std::optional<SparseOperator> coupling, double epsilonT) {
  f.validate();
  if (!(alpha >= 0.0) || !(gamma >= 0.0) || !(epsilonT >= 0.0)) {
    throw std::invalid_argument("makeImageProblem: weights must be non-negative");
  }
  ImageProblem pb;
  pb.forward = op;
  pb.width = op.width;
  pb.height = op.height;
  pb.frames = f.count();
  pb.alpha = alpha;
  pb.gamma = gamma;
  pb.epsilonT = epsilonT;
  for (const auto& frame : f.frames) pb.data.push_back(op.observe(frame));
  if (coupling) {
    if (coupling->rows() != (pb.frames - 1) * pb.pixels() || coupling->cols() != pb.unknowns()) {
      throw std::invalid_argument("makeImageProblem: coupling operator has the wrong shape");
    }
    pb.coupling = std::move(coupling);
  }
  return pb;
}

ImageDualState ImageDualState::zeros(const ImageProblem& pb) {
  const std::size_t pairs = pb.frames > 0 ? pb.frames - 1 : 0;
  return {std::vector<double>(pb.frames * pb.dataRows(), 0.0), std::vector<double>(pb.frames * 2 * pb.pixels(), 0.0),
          std::vector<double>(pb.hasCoupling() ? pairs * pb.pixels() : 0, 0.0),
          std::vector<double>(pb.hasTemporal() ? pairs * pb.pixels() : 0, 0.0)};
}

ImageSteps makeImageSteps(const ImageProblem& pb) {
  ImageSteps s;
  const std::size_t n = pb.pixels();
  const auto rowA = rowAbsSums(pb.forward.matrix);
  s.sigma1.resize(rowA.size());
  for (std::size_t r = 0; r < rowA.size(); ++r) s.sigma1[r] = 1.0 / (rowA[r] + kStepGuard);

  const auto colA = pb.forward.matrix.colAbsSums();
  s.tau.assign(pb.unknowns(), 0.0);
  for (std::size_t t = 0; t < pb.frames; ++t)
    for (std::size_t p = 0; p < n; ++p) s.tau[t * n + p] = colA[p] + 4.0;

  if (pb.hasCoupling()) {
    const auto rowC = rowAbsSums(*pb.coupling);
    s.sigma3.resize(rowC.size());
    for (std::size_t r = 0; r < rowC.size(); ++r) s.sigma3[r] = rowC[r] > 0.0 ? 1.0 / (rowC[r] + kStepGuard) : 0.0;
    const auto colC = pb.coupling->colAbsSums();
    for (std::size_t c = 0; c < colC.size(); ++c) s.tau[c] += colC[c];
  }
  if (pb.hasTemporal()) {
    for (std::size_t t = 0; t < pb.frames; ++t) {
      const double count = (t > 0 ? 1.0 : 0.0) + (t + 1 < pb.frames ? 1.0 : 0.0);
      for (std::size_t p = 0; p < n; ++p) s.tau[t * n + p] += count;
    }
  }
  for (auto& x : s.tau) x = 1.0 / (x + kStepGuard);
  return s;
}

double imageResidual(const ImageProblem& pb, const ImageSteps& steps, const ImageIterate& prev,
                     const ImageIterate& curr) {
  const int w = pb.width;
  const int h = pb.height;
  const std::size_t n = pb.pixels();
  const std::size_t m = pb.dataRows();
  const std::size_t total = pb.unknowns();
  const std::size_t pairs = pb.frames - 1;
  const auto& A = pb.forward.matrix;
  if (prev.u.size() != total || curr.u.size() != total) throw std::invalid_argument("imageResidual: size mismatch");

  auto diff = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
    return d;
  };
  const auto du = diff(prev.u, curr.u);                 // u^k - u^{k+1}
  const auto dy1 = diff(curr.dual.y1, prev.dual.y1);    // y^{k+1} - y^k
  const auto dy2 = diff(curr.dual.y2, prev.dual.y2);
  const auto dy3 = diff(curr.dual.y3, prev.dual.y3);
  const auto dy4 = diff(curr.dual.y4, prev.dual.y4);

  // primal: du / tau - K^T dy
  std::vector<double> kt(total, 0.0);
  std::vector<double> div(n);
  for (std::size_t t = 0; t < pb.frames; ++t) {
    std::span<double> ktFrame(kt.data() + t * n, n);
    A.addTransposed(std::span<const double>(dy1.data() + t * m, m), ktFrame);
    divergence(std::span<const double>(dy2.data() + t * 2 * n, n), std::span<const double>(dy2.data() + t * 2 * n + n, n),
               w, h, div);
    for (std::size_t p = 0; p < n; ++p) ktFrame[p] -= div[p];
  }
  if (pb.hasCoupling()) pb.coupling->addTransposed(dy3, kt);
  if (pb.hasTemporal()) addTemporalTranspose(dy4, pb.frames, n, kt, 1.0);
  double p = 0.0;
  for (std::size_t k = 0; k < total; ++k) p += std::abs(du[k] / steps.tau[k] - kt[k]);
  p /= static_cast<double>(total);

  // dual: (y^k - y^{k+1}) / sigma - K du
  double d1 = 0.0;
  std::vector<double> adu(m);
  for (std::size_t t = 0; t < pb.frames; ++t) {
    A.apply(std::span<const double>(du.data() + t * n, n), adu);
    for (std::size_t r = 0; r < m; ++r) d1 += std::abs(-dy1[t * m + r] / steps.sigma1[r] - adu[r]);
  }
  d1 /= static_cast<double>(pb.frames * m);

  double d2 = 0.0;
  std::vector<double> gx(n), gy(n);
  for (std::size_t t = 0; t < pb.frames; ++t) {
    gradient(std::span<const double>(du.data() + t * n, n), w, h, gx, gy);
    const double* y = dy2.data() + t * 2 * n;
    for (std::size_t q = 0; q < n; ++q) {
      d2 += std::abs(-y[q] / steps.sigma2 - gx[q]) + std::abs(-y[n + q] / steps.sigma2 - gy[q]);
    }
  }
  d2 /= static_cast<double>(pb.frames * 2 * n);

  double d3 = 0.0;
  if (pb.hasCoupling()) {
    const auto cdu = pb.coupling->apply(du);
    for (std::size_t r = 0; r < cdu.size(); ++r)
      if (steps.sigma3[r] > 0.0) d3 += std::abs(-dy3[r] / steps.sigma3[r] - cdu[r]);
    d3 /= static_cast<double>(pairs * n);
  }

  double d4 = 0.0;
  if (pb.hasTemporal()) {
    std::vector<double> ddu(pairs * n);
    temporalDifference(du, pb.frames, n, ddu);
    for (std::size_t r = 0; r < ddu.size(); ++r) d4 += std::abs(-dy4[r] / steps.sigma4 - ddu[r]);
    d4 /= static_cast<double>(pairs * n);
  }
  return p + d1 + d2 + d3 + d4;
}

double imageProblemEnergy(const ImageProblem& pb, std::span<const double> u) {
  const std::size_t n = pb.pixels();
  if (u.size() != pb.unknowns()) throw std::invalid_argument("imageProblemEnergy: size mismatch");
  double e = 0.0;
  std::vector<double> au(pb.dataRows()), gx(n), gy(n);
  for (std::size_t t = 0; t < pb.frames; ++t) {
    const auto frame = u.subspan(t * n, n);
    pb.forward.matrix.apply(frame, au);
    for (std::size_t r = 0; r < au.size(); ++r) e += 0.5 * (au[r] - pb.data[t][r]) * (au[r] - pb.data[t][r]);
    gradient(frame, pb.width, pb.height, gx, gy);
    for (std::size_t p = 0; p < n; ++p) e += pb.alpha * std::hypot(gx[p], gy[p]);
  }
  if (pb.hasCoupling()) {
    const auto cu = pb.coupling->apply(u);
    for (double c : cu) e += pb.gamma * std::abs(c);
  }
  if (pb.hasTemporal()) {
    std::vector<double> du((pb.frames - 1) * n);
    temporalDifference(u, pb.frames, n, du);
    for (double d : du) e += 0.5 * pb.epsilonT * d * d;
  }
  return e;
}

ImageSolveResult solveImages(const ImageProblem& pb, const ImageSolveParams& params, const ImageSequence* init,
                             const ImageDualState* initDual, const IterationLog& log) {
  if (pb.frames == 0) throw std::invalid_argument("solveImages: empty problem");
  if (params.nRes < 1 || params.maxIterations < 1) throw std::invalid_argument("solveImages: bad iteration limits");
  const int w = pb.width;
  const int h = pb.height;
  const std::size_t n = pb.pixels();
  const std::size_t m = pb.dataRows();
  const std::size_t total = pb.unknowns();
  const auto& A = pb.forward.matrix;
  const auto steps = makeImageSteps(pb);

  ImageIterate cur;
  if (init) {
    init->validate();
    if (init->count() != pb.frames || init->width() != w || init->height() != h) {
      throw std::invalid_argument("solveImages: initial sequence has the wrong shape");
    }
    cur.u = init->stacked();
  } else {
    cur.u.assign(total, 0.0);
  }
  const auto zeros = ImageDualState::zeros(pb);
  cur.dual = initDual ? *initDual : zeros;
  resizeOrZero(cur.dual.y1, zeros.y1.size());
  resizeOrZero(cur.dual.y2, zeros.y2.size());
  resizeOrZero(cur.dual.y3, zeros.y3.size());
  resizeOrZero(cur.dual.y4, zeros.y4.size());

  std::vector<double> ubar = cur.u;
  std::vector<double> au(m), gx(n), gy(n), div(n), grad(total), cu, du;
  if (pb.hasCoupling()) cu.resize(pb.coupling->rows());
  if (pb.hasTemporal()) du.resize((pb.frames - 1) * n);

  ImageSolveResult result;
  ImageIterate prev;
  for (int k = 1; k <= params.maxIterations; ++k) {
    const bool check = k % params.nRes == 0 || k == params.maxIterations;
    if (check) prev = cur;

    // dual ascent
    for (std::size_t t = 0; t < pb.frames; ++t) {
      const std::span<const double> frame(ubar.data() + t * n, n);
      A.apply(frame, au);
      double* y1 = cur.dual.y1.data() + t * m;
      const auto& f = pb.data[t];
      for (std::size_t r = 0; r < m; ++r) {
        const double s = steps.sigma1[r];
        y1[r] = (y1[r] + s * (au[r] - f[r])) / (1.0 + s);
      }
      gradient(frame, w, h, gx, gy);
      double* y2x = cur.dual.y2.data() + t * 2 * n;
      double* y2y = y2x + n;
      for (std::size_t p = 0; p < n; ++p) {
        const double a = y2x[p] + steps.sigma2 * gx[p];
        const double b = y2y[p] + steps.sigma2 * gy[p];
        const double scale = pb.alpha > 0.0 ? std::max(1.0, std::sqrt(a * a + b * b) / pb.alpha) : HUGE_VAL;
        y2x[p] = pb.alpha > 0.0 ? a / scale : 0.0;
        y2y[p] = pb.alpha > 0.0 ? b / scale : 0.0;
      }
    }
    if (pb.hasCoupling()) {
      pb.coupling->apply(ubar, cu);
      for (std::size_t r = 0; r < cu.size(); ++r) {
        cur.dual.y3[r] = std::clamp(cur.dual.y3[r] + steps.sigma3[r] * cu[r], -pb.gamma, pb.gamma);
      }
    }
    if (pb.hasTemporal()) {
      temporalDifference(ubar, pb.frames, n, du);
      const double shrink = 1.0 + steps.sigma4 / pb.epsilonT;
      for (std::size_t r = 0; r < du.size(); ++r) cur.dual.y4[r] = (cur.dual.y4[r] + steps.sigma4 * du[r]) / shrink;
    }

    // primal descent: grad = A^T y1 - div y2 + C^T y3 + D^T y4
    for (std::size_t t = 0; t < pb.frames; ++t) {
      std::span<double> g(grad.data() + t * n, n);
      A.applyTranspose(std::span<const double>(cur.dual.y1.data() + t * m, m), g);
      const double* y2x = cur.dual.y2.data() + t * 2 * n;
      divergence(std::span<const double>(y2x, n), std::span<const double>(y2x + n, n), w, h, div);
      for (std::size_t p = 0; p < n; ++p) g[p] -= div[p];
    }
    if (pb.hasCoupling()) pb.coupling->addTransposed(cur.dual.y3, grad);
    if (pb.hasTemporal()) addTemporalTranspose(cur.dual.y4, pb.frames, n, grad, 1.0);
    for (std::size_t c = 0; c < total; ++c) {
      const double next = cur.u[c] - steps.tau[c] * grad[c];
      ubar[c] = 2.0 * next - cur.u[c];
      cur.u[c] = next;
    }

    result.iterations = k;
    if (check) {
      if (!std::all_of(cur.u.begin(), cur.u.end(), [](double x) { return std::isfinite(x); })) {
        throw SolverError("image solver: non-finite iterate", k);
      }
      result.residual = imageResidual(pb, steps, prev, cur);
      if (log) log(k, result.residual);
      if (result.residual <= params.eps) {
        result.converged = true;
        break;
      }
    }
  }
  result.u = ImageSequence::fromStacked(cur.u, w, h, pb.frames);
  result.dual = std::move(cur.dual);
  return result;
}

ImageSolveResult solveImages(const ImageSequence& f, const FlowSequence& flows, const ForwardOperator& op,
                             double alpha, double gamma, const ImageSolveParams& params, bool timeContinuous,
                             const ImageSequence* init, const ImageDualState* initDual) {
  std::optional<SparseOperator> coupling;
  if (gamma > 0.0 && f.count() > 1) {
    if (flows.count() + 1 != f.count()) throw std::invalid_argument("solveImages: need one flow per frame pair");
    coupling = buildCouplingOperator(flows, op.width, op.height, timeContinuous);
  }
  const auto pb = makeImageProblem(f, op, alpha, gamma, std::move(coupling));
  return solveImages(pb, params, init, initDual);
}

ImageSolveResult initROF(const ImageSequence& f, const ForwardOperator& op, double alpha,
                         const ImageSolveParams& params) {
  if (!(alpha > 0.0)) throw std::invalid_argument("initROF: alpha must be > 0");
  f.validate();
  ImageSolveResult out;
  out.converged = true;
  for (const auto& frame : f.frames) {
    const auto pb = makeImageProblem(ImageSequence{{frame}}, op, alpha, 0.0, std::nullopt);
    auto r = solveImages(pb, params);
    out.u.frames.push_back(std::move(r.u.frames.front()));
    out.dual.y1.insert(out.dual.y1.end(), r.dual.y1.begin(), r.dual.y1.end());
    out.dual.y2.insert(out.dual.y2.end(), r.dual.y2.begin(), r.dual.y2.end());
    out.iterations = std::max(out.iterations, r.iterations);
    out.residual = std::max(out.residual, r.residual);
    out.converged = out.converged && r.converged;
  }
  return out;
}

ImageSolveResult initSmoothTime(const ImageSequence& f, const ForwardOperator& op, double alpha, double epsilonT,
                                const ImageSolveParams& params) {
  if (!(alpha > 0.0)) throw std::invalid_argument("initSmoothTime: alpha must be > 0");
  if (!(epsilonT > 0.0)) throw std::invalid_argument("initSmoothTime: epsilonT must be > 0");
  const auto pb = makeImageProblem(f, op, alpha, 0.0, std::nullopt, epsilonT);
  return solveImages(pb, params);
}

}  // namespace jointflow
