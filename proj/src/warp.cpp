#include "jointflow/warp.hpp"

#include <cmath>
#include <stdexcept>

#include "jointflow/interpolation.hpp"
#include "jointflow/operators.hpp"

namespace jointflow {

namespace {

void checkFlow(const FlowField& flow, int width, int height) {
  if (flow.width() != width || flow.height() != height || !flow.v1.sameShape(flow.v2)) {
    throw std::invalid_argument("warp: flow dimensions do not match the frame");
  }
  if (!flow.allFinite()) throw std::invalid_argument("warp: flow contains non-finite values");
}

// Appends the row triplets of W (column offset `colOffset`) and returns a per-row flag for
// whether the row is nonzero.
std::vector<bool> appendWarpRows(const FlowField& flow, int width, int height, std::size_t colOffset,
                                 std::vector<Triplet>& out) {
  std::vector<bool> active(static_cast<std::size_t>(width) * height, false);
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) {
      const std::size_t row = static_cast<std::size_t>(j) * width + i;
      const auto s = bicubicStencil(width, height, i + flow.v1[row], j + flow.v2[row]);
      if (!s) continue;
      active[row] = true;
      const auto wx = cubicWeights(s->fx);
      const auto wy = cubicWeights(s->fy);
      for (int l = 0; l < 4; ++l)
        for (int k = 0; k < 4; ++k) {
          const double weight = wx[k] * wy[l];
          if (std::abs(weight) < kWarpDropTolerance) continue;
          const std::size_t col = static_cast<std::size_t>(s->j0 + l) * width + (s->i0 + k);
          out.push_back({row, colOffset + col, weight});
        }
    }
  return active;
}

SparseOperator stackPairs(const FlowSequence& flows, int width, int height,
                          SparseOperator (*pairBuilder)(const FlowField&, int, int)) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  const std::size_t pairs = flows.count();
  std::vector<Triplet> t;
  for (std::size_t p = 0; p < pairs; ++p) {
    const SparseOperator block = pairBuilder(flows.fields[p], width, height);
    const auto start = block.rowStart();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t e = start[r]; e < start[r + 1]; ++e)
        t.push_back({p * n + r, p * n + block.colIndex()[e], block.values()[e]});
  }
  return SparseOperator::fromTriplets(pairs * n, (pairs + 1) * n, std::move(t));
}

}  // namespace

WarpMatrix buildWarpMatrix(const FlowField& flow, int width, int height) {
  checkFlow(flow, width, height);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<Triplet> t;
  t.reserve(16 * n);
  appendWarpRows(flow, width, height, 0, t);
  return {SparseOperator::fromTriplets(n, n, std::move(t)), flow};
}

SparseOperator buildWarpPair(const FlowField& flow, int width, int height) {
  checkFlow(flow, width, height);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<Triplet> t;
  t.reserve(17 * n);
  const auto active = appendWarpRows(flow, width, height, n, t);
  for (std::size_t r = 0; r < n; ++r)
    if (active[r]) t.push_back({r, r, -1.0});
  return SparseOperator::fromTriplets(n, 2 * n, std::move(t));
}

SparseOperator buildTimeContinuousK(const FlowField& flow, int width, int height) {
  checkFlow(flow, width, height);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<Triplet> t;
  t.reserve(6 * n);
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * width + i;
      const double a = flow.v1[p];
      const double b = flow.v2[p];
      t.push_back({p, p, -1.0});
      double self = 1.0;
      if (i + 1 < width) {
        self -= a;
        t.push_back({p, n + p + 1, a});
      }
      if (j + 1 < height) {
        self -= b;
        t.push_back({p, n + p + static_cast<std::size_t>(width), b});
      }
      t.push_back({p, n + p, self});
    }
  return SparseOperator::fromTriplets(n, 2 * n, std::move(t));
}

SparseOperator buildBlockWarp(const FlowSequence& flows, int width, int height) {
  return stackPairs(flows, width, height, &buildWarpPair);
}

SparseOperator buildBlockTimeContinuous(const FlowSequence& flows, int width, int height) {
  return stackPairs(flows, width, height, &buildTimeContinuousK);
}

}  // namespace jointflow
