#pragma once

#include "jointflow/config.hpp"
#include "jointflow/image.hpp"
#include "jointflow/operators.hpp"

namespace jointflow {

/// Isotropic total variation sum_p |grad u(p)|_2.
double totalVariation(const Image& u);

/// Term-by-term breakdown of the joint energy.
struct EnergyTerms {
  double data = 0.0;       // sum_i 1/2 |A u^i - f^i|^2
  double imageTV = 0.0;    // alpha * sum_i TV(u^i)
  double coupling = 0.0;   // gamma * sum_i |rho(v^i, u^i, u^{i+1})|_1
  double flowTV = 0.0;     // beta * sum_i sum_j TV(v^{i,j})
  double total() const { return data + imageTV + coupling + flowTV; }
};

/// Joint energy with the warped brightness residual evaluated at the current flow, so
/// rho = u^{i+1}(x + v^i) - u^i through the bicubic warp (or K in time-continuous mode).
/// Throws std::invalid_argument on shape mismatch, std::runtime_error on a non-finite result.
EnergyTerms jointEnergyTerms(const ImageSequence& u, const FlowSequence& v, const ImageSequence& f,
                             const ForwardOperator& op, const SolveConfig& cfg);

inline double jointEnergy(const ImageSequence& u, const FlowSequence& v, const ImageSequence& f,
                          const ForwardOperator& op, const SolveConfig& cfg) {
  return jointEnergyTerms(u, v, f, op, cfg).total();
}

struct Normalization {
  ImageSequence sequence;
  double scale = 1.0;
  double offset = 0.0;
};

/// Global affine map of all intensities onto [0, 1]; x = scale * y + offset inverts it.
/// A constant sequence maps to zeros with scale 1 and offset equal to the constant.
Normalization normalizeSequence(const ImageSequence& f);
ImageSequence denormalizeSequence(const ImageSequence& u, double scale, double offset);

}  // namespace jointflow
