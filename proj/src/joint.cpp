#include "jointflow/joint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>

#include "jointflow/flow_solver.hpp"
#include "jointflow/image_solver.hpp"

namespace jointflow {

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double meanAbsDiff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

std::vector<FlowSolveResult> solveAllPairs(const ImageSequence& u, const SolveConfig& cfg) {
  const std::size_t pairs = u.count() - 1;
  std::vector<FlowSolveResult> out(pairs);
  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(pairs)));
  if (workers == 1) {
    for (std::size_t i = 0; i < pairs; ++i) out[i] = solveFlowPyramid(u.frames[i], u.frames[i + 1], cfg);
    return out;
  }
  for (std::size_t first = 0; first < pairs; first += workers) {
    std::vector<std::future<FlowSolveResult>> batch;
    const std::size_t last = std::min(pairs, first + workers);
    for (std::size_t i = first; i < last; ++i) {
      batch.push_back(std::async(std::launch::async, [&u, &cfg, i] {
        return solveFlowPyramid(u.frames[i], u.frames[i + 1], cfg);
      }));
    }
    for (std::size_t i = first; i < last; ++i) out[i] = batch[i - first].get();
  }
  return out;
}

}  // namespace

JointResult solveJoint(const ImageSequence& f, const ForwardOperator& op, const SolveConfig& cfg) {
  cfg.validate();
  f.validate();
  if (f.count() < 2) throw std::invalid_argument("solveJoint: need at least two frames");
  const int w = op.width;
  const int h = op.height;
  const ImageSolveParams imageParams{cfg.epsU, cfg.nRes, cfg.imageMaxIterations};

  JointResult out;
  auto& diag = out.diagnostics;

  auto start = Clock::now();
  ImageSolveResult init = cfg.init == InitKind::SmoothTime ? initSmoothTime(f, op, cfg.alpha, cfg.epsilonT, imageParams)
                                                           : initROF(f, op, cfg.alpha, imageParams);
  diag.initSeconds = secondsSince(start);
  diag.initIterations = init.iterations;
  diag.initConverged = init.converged;
  if (!init.converged) diag.warnings.push_back("initialization did not reach epsU within the iteration cap");

  out.u = std::move(init.u);
  out.v = FlowSequence::zeros(f.count() - 1, w, h);
  ImageDualState dual = std::move(init.dual);
  diag.initialTerms = jointEnergyTerms(out.u, out.v, f, op, cfg);
  diag.initialEnergy = diag.initialTerms.total();

  for (int iteration = 1; iteration <= cfg.iterMainMax; ++iteration) {
    OuterIteration rec;
    rec.iteration = iteration;
    try {
      const auto uOld = out.u.stacked();
      const auto vOld = out.v.stacked();

      start = Clock::now();
      auto flows = solveAllPairs(out.u, cfg);
      rec.flowSeconds = secondsSince(start);
      for (std::size_t i = 0; i < flows.size(); ++i) {
        rec.flowIterations.push_back(flows[i].stats.totalIterations());
        rec.flowConverged = rec.flowConverged && flows[i].stats.allConverged();
        out.v.fields[i] = std::move(flows[i].flow);
      }

      // with gamma = 0 the u-subproblem is the initialization problem, already solved
      if (cfg.gamma > 0.0) {
        start = Clock::now();
        auto r = solveImages(f, out.v, op, cfg.alpha, cfg.gamma, imageParams, cfg.timeContinuous, &out.u, &dual);
        rec.imageSeconds = secondsSince(start);
        rec.imageIterations = r.iterations;
        rec.imageResidual = r.residual;
        rec.imageConverged = r.converged;
        out.u = std::move(r.u);
        dual = std::move(r.dual);
      }

      rec.rMain = meanAbsDiff(out.u.stacked(), uOld) + meanAbsDiff(out.v.stacked(), vOld);
      rec.terms = jointEnergyTerms(out.u, out.v, f, op, cfg);
      rec.energy = rec.terms.total();
    } catch (const std::exception& e) {
      throw std::runtime_error("outer iteration " + std::to_string(iteration) + ": " + e.what());
    }

    const std::string tag = "outer iteration " + std::to_string(iteration) + ": ";
    if (!rec.flowConverged) diag.warnings.push_back(tag + "a flow solve hit its iteration cap before epsV");
    if (!rec.imageConverged) diag.warnings.push_back(tag + "image solve hit its iteration cap before epsU");
    const double previous = diag.iterations.empty() ? diag.initialEnergy : diag.iterations.back().energy;
    if (rec.energy > previous) diag.warnings.push_back(tag + "energy increased");

    diag.iterations.push_back(rec);
    if (rec.rMain <= cfg.epsMain) {
      diag.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace jointflow
