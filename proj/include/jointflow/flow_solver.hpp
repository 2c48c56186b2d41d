#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jointflow/config.hpp"
#include "jointflow/image.hpp"
#include "jointflow/operators.hpp"

namespace jointflow {

/// Called every residual check with (iteration, residual).
using IterationLog = std::function<void(int, double)>;

/// Thrown when an iterate stops being finite.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int iteration)
      : std::runtime_error(what + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// Brightness-constancy linearization of u2 around the flow vtilde:
/// rho(v) = gx * v1 + gy * v2 + ut with ut = -vtilde . grad(utilde) + utilde - u1.
struct WarpLinearization {
  Image utilde;
  Image gx;
  Image gy;
  Image ut;
  std::vector<std::uint8_t> valid;  // 0 where the warp left the grid; gx = gy = ut = 0 there

  int width() const { return utilde.width(); }
  int height() const { return utilde.height(); }
};

/// Bicubic warp of u2 and of its central-difference derivatives to x + vtilde.
WarpLinearization linearize(const Image& u1, const Image& u2, const FlowField& vtilde);

/// Unwarped linearization around zero flow with forward-difference derivatives, matching the
/// time-continuous coupling operator.
WarpLinearization linearizeClassical(const Image& u1, const Image& u2);

struct FlowDualState {
  GradientField y1;  // TV dual of v1
  GradientField y2;  // TV dual of v2
  Image y3;          // data-term dual, |y3| <= 1

  static FlowDualState zeros(int width, int height);
};

/// Diagonal preconditioned step sizes.
struct FlowSteps {
  double sigma1 = 0.5;
  double sigma2 = 0.5;
  std::vector<double> sigma3;  // 1 / (|ux| + |uy|), 0 on invalid pixels
  std::vector<double> tau1;    // 1 / (4 + |ux|)
  std::vector<double> tau2;    // 1 / (4 + |uy|)
};

FlowSteps makeFlowSteps(const WarpLinearization& lin);

struct FlowIterate {
  FlowField v;
  FlowDualState dual;
};

/// Primal-dual residual p1 + p2 + d1 + d2 + d3 between consecutive iterates, with every
/// term divided by the number of entries it sums over.
double flowResidual(const FlowIterate& prev, const FlowIterate& curr, const WarpLinearization& lin,
                    const FlowSteps& steps);

struct FlowLevelParams {
  double weight = 0.02;  // TV ball radius (beta / gamma)
  double eps = 1e-6;
  int nRes = 100;
  int maxIterations = 10000;
};

struct FlowLevelResult {
  FlowIterate state;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Primal-dual iterations for one linearization, warm-started from `init`.
/// Throws SolverError if an iterate becomes non-finite.
FlowLevelResult solveFlowLevel(const WarpLinearization& lin, const FlowIterate& init, const FlowLevelParams& params,
                               const IterationLog& log = {});

/// Flow TV-L1 energy of one linearization: sum |rho(v)| + weight * (TV(v1) + TV(v2)).
double flowLevelEnergy(const WarpLinearization& lin, const FlowField& v, double weight);

struct FlowSolveStats {
  struct Solve {
    int level = 0;
    int warp = 0;
    int width = 0;
    int height = 0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
  };
  std::vector<Solve> solves;

  int totalIterations() const;
  bool allConverged() const;
};

struct FlowSolveResult {
  FlowField flow;
  FlowSolveStats stats;
};

/// Coarse-to-fine warped TV-L1 flow from u1 to u2 (u2(x + v) ~ u1(x)).
/// In time-continuous mode a single unwarped solve on the full grid replaces the pyramid.
FlowSolveResult solveFlowPyramid(const Image& u1, const Image& u2, const SolveConfig& cfg,
                                 const IterationLog& log = {});

}  // namespace jointflow
