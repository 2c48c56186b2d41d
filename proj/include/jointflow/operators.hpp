#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jointflow/config.hpp"
#include "jointflow/image.hpp"
#include "jointflow/sparse.hpp"

namespace jointflow {

struct GradientField {
  Image gx;
  Image gy;
};

/// Forward differences with Neumann boundary: gx(n_x, j) = 0, gy(i, n_y) = 0.
GradientField gradient(const Image& u);

/// Backward differences with Dirichlet boundary; the negative adjoint of gradient().
Image divergence(const GradientField& y);

// In-place kernels on raw frames, used by the solvers.
void gradient(std::span<const double> u, int width, int height, std::span<double> gx, std::span<double> gy);
void divergence(std::span<const double> gx, std::span<const double> gy, int width, int height,
                std::span<double> div);

/// 2N x N matrix; rows [0, N) hold d/dx, rows [N, 2N) hold d/dy.
SparseOperator buildGradientMatrix(int width, int height);

/// Forward-difference d/dx or d/dy alone (N x N), zero rows on the far boundary.
SparseOperator buildDerivativeX(int width, int height);
SparseOperator buildDerivativeY(int width, int height);

struct ForwardParams {
  /// Observed-pixel bitmap (width * height) for OperatorKind::Mask; nonzero = observed.
  std::vector<std::uint8_t> mask;
  /// Decimation factor for OperatorKind::Subsample.
  int factor = 2;
  /// Kernel std-dev for OperatorKind::Blur.
  double blurSigma = 1.0;
};

/// Linear map A from the reconstruction grid to the observation vector.
struct ForwardOperator {
  OperatorKind kind = OperatorKind::Identity;
  int width = 0;       // reconstruction grid
  int height = 0;
  int dataWidth = 0;   // expected shape of an observed frame
  int dataHeight = 0;
  SparseOperator matrix;
  std::vector<std::size_t> observedPixels;  // Mask only: data row -> pixel index

  /// Observation vector for one frame; throws if the frame has the wrong shape.
  std::vector<double> observe(const Image& f) const;
  /// Places an observation vector back on the observed frame grid (Mask: unobserved = 0).
  Image embed(std::span<const double> data) const;
};

/// Throws std::invalid_argument for a bad factor, sigma, or mask size.
ForwardOperator buildForwardOperator(OperatorKind kind, int width, int height, const ForwardParams& params = {});

/// Reconstruction grid for observed frames of the given shape.
std::pair<int, int> reconstructionSize(OperatorKind kind, int dataWidth, int dataHeight, int factor);

}  // namespace jointflow
