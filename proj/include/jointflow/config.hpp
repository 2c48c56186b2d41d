#pragma once

#include <string>
#include <string_view>

namespace jointflow {

enum class OperatorKind { Identity, Mask, Subsample, Blur };
enum class InitKind { Rof, SmoothTime };

std::string_view toString(OperatorKind kind);
std::string_view toString(InitKind kind);
OperatorKind parseOperatorKind(std::string_view text);
InitKind parseInitKind(std::string_view text);

/// Anti-aliasing presmoothing for one pyramid step of factor `eta`.
double defaultPyramidSigma(double eta);

struct SolveConfig {
  // model weights, on intensities normalized to [0, 1]
  double alpha = 0.02;
  double beta = 0.02;
  double gamma = 1.0;

  // coarse-to-fine pyramid
  double eta = 0.8;
  int nWarps = 3;
  int sizeMed = 5;
  int minScaleDim = 10;
  double sigmaD = 0.375;

  // stopping
  double epsU = 1e-6;
  double epsV = 1e-6;
  double epsMain = 1e-5;
  int nRes = 100;
  int iterMainMax = 10;
  int flowMaxIterations = 10000;
  int imageMaxIterations = 20000;

  // forward operator
  OperatorKind operatorKind = OperatorKind::Identity;
  int subsampleFactor = 2;
  double blurSigma = 1.0;
  std::string maskPath;

  bool timeContinuous = false;
  InitKind init = InitKind::Rof;
  double epsilonT = 0.01;

  /// Worker threads for the per-pair flow solves; 0 picks hardware concurrency.
  int threads = 0;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  /// TV radius of the flow subproblem after dividing through by gamma.
  double flowWeight() const { return gamma > 0.0 ? beta / gamma : beta; }

  friend bool operator==(const SolveConfig&, const SolveConfig&) = default;
};

}  // namespace jointflow
