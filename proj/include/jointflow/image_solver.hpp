#pragma once

#include <optional>
#include <vector>

#include "jointflow/flow_solver.hpp"
#include "jointflow/image.hpp"
#include "jointflow/operators.hpp"
#include "jointflow/sparse.hpp"

namespace jointflow {

/// Space-time image problem
///   min_u 1/2 |A u - f|^2 + alpha |grad u|_{1,2} + gamma |C u|_1 + epsT/2 |D u|^2
/// with A applied frame-wise, C the (n-1)N x nN flow coupling and D forward temporal
/// differences. Either coupling may be absent.
struct ImageProblem {
  ForwardOperator forward;
  std::vector<std::vector<double>> data;  // observation vector per frame
  int width = 0;
  int height = 0;
  std::size_t frames = 0;
  double alpha = 0.02;
  double gamma = 0.0;
  std::optional<SparseOperator> coupling;
  double epsilonT = 0.0;  // > 0 enables the quadratic temporal term

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  std::size_t unknowns() const { return pixels() * frames; }
  std::size_t dataRows() const { return forward.matrix.rows(); }
  bool hasCoupling() const { return coupling.has_value() && gamma > 0.0; }
  bool hasTemporal() const { return epsilonT > 0.0 && frames > 1; }
};

/// Builds the problem for observed frames `f`; `coupling` may be empty.
ImageProblem makeImageProblem(const ImageSequence& f, const ForwardOperator& op, double alpha, double gamma,
                              std::optional<SparseOperator> coupling, double epsilonT = 0.0);

struct ImageDualState {
  std::vector<double> y1;  // data term, frames * dataRows
  std::vector<double> y2;  // TV, per frame [gx | gy], frames * 2N
  std::vector<double> y3;  // flow coupling, (frames - 1) * N
  std::vector<double> y4;  // temporal smoothness, (frames - 1) * N

  static ImageDualState zeros(const ImageProblem& problem);
};

struct ImageSteps {
  std::vector<double> sigma1;  // 1 / |A_r|_1 per data row
  double sigma2 = 0.5;
  std::vector<double> sigma3;  // 1 / |C_r|_1, 0 on zero rows
  double sigma4 = 0.5;
  std::vector<double> tau;     // 1 / (|A^T_c|_1 + 4 + |C^T_c|_1 + |D^T_c|_1)
};

ImageSteps makeImageSteps(const ImageProblem& problem);

struct ImageIterate {
  std::vector<double> u;  // stacked frames
  ImageDualState dual;
};

/// Primal-dual residual p + d1 + d2 + d3 (+ d4 for the temporal term), each divided by its
/// entry count.
double imageResidual(const ImageProblem& problem, const ImageSteps& steps, const ImageIterate& prev,
                     const ImageIterate& curr);

/// Energy of the problem at the stacked sequence u.
double imageProblemEnergy(const ImageProblem& problem, std::span<const double> u);

struct ImageSolveParams {
  double eps = 1e-6;
  int nRes = 100;
  int maxIterations = 20000;
};

struct ImageSolveResult {
  ImageSequence u;
  ImageDualState dual;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Primal-dual solve; warm-started from `init` / `initDual` when given, otherwise zero.
/// Throws SolverError on a non-finite iterate.
ImageSolveResult solveImages(const ImageProblem& problem, const ImageSolveParams& params,
                             const ImageSequence* init = nullptr, const ImageDualState* initDual = nullptr,
                             const IterationLog& log = {});

/// Convenience form: builds the warp (or time-continuous) coupling from `flows`.
ImageSolveResult solveImages(const ImageSequence& f, const FlowSequence& flows, const ForwardOperator& op,
                             double alpha, double gamma, const ImageSolveParams& params, bool timeContinuous = false,
                             const ImageSequence* init = nullptr, const ImageDualState* initDual = nullptr);

/// Frame-wise ROF (gamma = 0); each frame is solved on its own.
ImageSolveResult initROF(const ImageSequence& f, const ForwardOperator& op, double alpha,
                         const ImageSolveParams& params);

/// ROF plus a quadratic penalty epsilonT / 2 |u^{i+1} - u^i|^2 on the temporal differences.
ImageSolveResult initSmoothTime(const ImageSequence& f, const ForwardOperator& op, double alpha, double epsilonT,
                                const ImageSolveParams& params);

}  // namespace jointflow
