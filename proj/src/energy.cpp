#include "jointflow/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jointflow/warp.hpp"

namespace jointflow {

double totalVariation(const Image& u) {
  const auto g = gradient(u);
  double tv = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) tv += std::hypot(g.gx[p], g.gy[p]);
  return tv;
}

EnergyTerms jointEnergyTerms(const ImageSequence& u, const FlowSequence& v, const ImageSequence& f,
                             const ForwardOperator& op, const SolveConfig& cfg) {
  u.validate();
  f.validate();
  if (u.count() != f.count()) throw std::invalid_argument("jointEnergy: u and f frame counts differ");
  if (v.count() + 1 != u.count()) throw std::invalid_argument("jointEnergy: need one flow field per frame pair");
  const int w = u.width();
  const int h = u.height();
  if (w != op.width || h != op.height) throw std::invalid_argument("jointEnergy: operator does not match u");
  for (const auto& field : v.fields) {
    if (field.width() != w || field.height() != h) throw std::invalid_argument("jointEnergy: flow shape mismatch");
  }

  EnergyTerms e;
  std::vector<double> residual(op.matrix.rows());
  for (std::size_t t = 0; t < u.count(); ++t) {
    const auto data = op.observe(f.frames[t]);
    op.matrix.apply(u.frames[t].data(), residual);
    for (std::size_t r = 0; r < residual.size(); ++r) {
      const double d = residual[r] - data[r];
      e.data += 0.5 * d * d;
    }
    e.imageTV += cfg.alpha * totalVariation(u.frames[t]);
  }

  if (v.count() > 0) {
    const auto coupling = buildCouplingOperator(v, w, h, cfg.timeContinuous);
    const auto rho = coupling.apply(u.stacked());
    double l1 = 0.0;
    for (double r : rho) l1 += std::abs(r);
    e.coupling = cfg.gamma * l1;
    for (const auto& field : v.fields) e.flowTV += cfg.beta * (totalVariation(field.v1) + totalVariation(field.v2));
  }

  if (!std::isfinite(e.total())) throw std::runtime_error("jointEnergy: non-finite energy");
  return e;
}

Normalization normalizeSequence(const ImageSequence& f) {
  f.validate();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& frame : f.frames) {
    const auto [a, b] = std::minmax_element(frame.values().begin(), frame.values().end());
    lo = std::min(lo, *a);
    hi = std::max(hi, *b);
  }
  Normalization out;
  out.offset = lo;
  out.scale = hi > lo ? hi - lo : 1.0;
  out.sequence = f;
  for (auto& frame : out.sequence.frames)
    for (auto& x : frame.data()) x = hi > lo ? (x - lo) / out.scale : 0.0;
  return out;
}

ImageSequence denormalizeSequence(const ImageSequence& u, double scale, double offset) {
  ImageSequence out = u;
  for (auto& frame : out.frames)
    for (auto& x : frame.data()) x = x * scale + offset;
  return out;
}

}  // namespace jointflow
