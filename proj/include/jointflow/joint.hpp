#pragma once

#include <string>
#include <vector>

#include "jointflow/config.hpp"
#include "jointflow/energy.hpp"
#include "jointflow/image.hpp"
#include "jointflow/operators.hpp"

namespace jointflow {

struct OuterIteration {
  int iteration = 0;
  double energy = 0.0;
  EnergyTerms terms;
  double rMain = 0.0;
  std::vector<int> flowIterations;  // per frame pair, summed over levels and warps
  bool flowConverged = true;
  int imageIterations = 0;
  double imageResidual = 0.0;
  bool imageConverged = true;
  double flowSeconds = 0.0;
  double imageSeconds = 0.0;
};

struct JointDiagnostics {
  double initialEnergy = 0.0;  // after initialization, with v = 0
  EnergyTerms initialTerms;
  int initIterations = 0;
  bool initConverged = true;
  double initSeconds = 0.0;
  std::vector<OuterIteration> iterations;
  bool converged = false;  // r_main reached epsMain
  std::vector<std::string> warnings;

  double finalEnergy() const { return iterations.empty() ? initialEnergy : iterations.back().energy; }
};

struct JointResult {
  ImageSequence u;
  FlowSequence v;
  JointDiagnostics diagnostics;
};

/// Alternating minimization of the joint reconstruction/motion energy.
/// `f` holds observed frames (shape op.dataWidth x op.dataHeight). Errors from the subproblems
/// are rethrown with the outer iteration attached.
JointResult solveJoint(const ImageSequence& f, const ForwardOperator& op, const SolveConfig& cfg);

}  // namespace jointflow
