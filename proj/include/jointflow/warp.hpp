#pragma once

#include "jointflow/image.hpp"
#include "jointflow/sparse.hpp"

namespace jointflow {

/// Sparse bicubic warp: (W u)(i, j) ~ u(i + v1(i, j), j + v2(i, j)).
/// Rows whose 4x4 stencil leaves the grid are zero.
struct WarpMatrix {
  SparseOperator op;
  FlowField flow;
};

/// Interpolation weights below this magnitude are not stored.
inline constexpr double kWarpDropTolerance = 1e-14;

WarpMatrix buildWarpMatrix(const FlowField& flow, int width, int height);

/// N x 2N pair block [-I, W] acting on (u^i, u^{i+1}); the -I entry is removed on
/// rows where W is zero.
SparseOperator buildWarpPair(const FlowField& flow, int width, int height);

/// N x 2N linearized coupling [-I, diag(v1) dx + diag(v2) dy + I] on (u^i, u^{i+1}).
SparseOperator buildTimeContinuousK(const FlowField& flow, int width, int height);

/// (n-1)N x nN block-bidiagonal coupling built from per-pair blocks; pair i occupies
/// rows [iN, (i+1)N) and columns [iN, (i+2)N).
SparseOperator buildBlockWarp(const FlowSequence& flows, int width, int height);
SparseOperator buildBlockTimeContinuous(const FlowSequence& flows, int width, int height);

inline SparseOperator buildCouplingOperator(const FlowSequence& flows, int width, int height, bool timeContinuous) {
  return timeContinuous ? buildBlockTimeContinuous(flows, width, height) : buildBlockWarp(flows, width, height);
}

}  // namespace jointflow
