#pragma once

#include <array>
#include <optional>
#include <vector>

#include "jointflow/image.hpp"

namespace jointflow {

/// Catmull-Rom cubic through p0..p3 (at -1, 0, 1, 2), evaluated at x in [0, 1].
double cubic1d(double p0, double p1, double p2, double p3, double x);

/// Weights w_k with cubic1d(p, x) = sum_k w_k p_k.
std::array<double, 4> cubicWeights(double x);

/// 4x4 neighbourhood of a sample position: columns i0..i0+3, rows j0..j0+3,
/// with fractional offsets fx, fy in [0, 1).
struct BicubicStencil {
  int i0 = 0;
  int j0 = 0;
  double fx = 0.0;
  double fy = 0.0;
};

/// Stencil for position (x, y), or nullopt when it leaves the grid
/// (i0 < 0, j0 < 0, i0 + 3 > n_x or j0 + 3 > n_y). Throws on non-finite input.
std::optional<BicubicStencil> bicubicStencil(int width, int height, double x, double y);

/// Two-stage bicubic interpolation; nullopt when the stencil leaves the grid.
std::optional<double> bicubicSample(const Image& u, double x, double y);

/// Same interpolation with out-of-range stencil indices clamped to the border.
double bicubicSampleClamped(const Image& u, double x, double y);

/// Corner-aligned bicubic resampling with clamped borders.
Image resampleBicubic(const Image& u, int newWidth, int newHeight);

/// Normalized Gaussian taps on [-ceil(3 sigma), ceil(3 sigma)]; {1} for sigma == 0.
std::vector<double> gaussianKernel(double sigma);

/// Separable Gaussian convolution with replicate boundary.
Image gaussianSmooth(const Image& u, double sigma);

/// size x size median, window clipped at the borders. Throws on even or non-positive size.
Image medianFilter(const Image& u, int size);

struct LevelSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const LevelSize&, const LevelSize&) = default;
};

/// Pyramid shapes, finest first. Level s has round(w * eta^s) x round(h * eta^s) and exists
/// while both w * eta^s and h * eta^s stay >= minDim.
std::vector<LevelSize> buildPyramidSizes(int width, int height, double eta, int minDim);

}  // namespace jointflow
