#include "jointflow/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "jointflow/interpolation.hpp"

namespace jointflow {

void gradient(std::span<const double> u, int width, int height, std::span<double> gx, std::span<double> gy) {
  for (int j = 0; j < height; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * width;
    for (int i = 0; i < width; ++i) {
      const std::size_t p = row + i;
      gx[p] = i + 1 < width ? u[p + 1] - u[p] : 0.0;
      gy[p] = j + 1 < height ? u[p + width] - u[p] : 0.0;
    }
  }
}

void divergence(std::span<const double> gx, std::span<const double> gy, int width, int height,
                std::span<double> div) {
  for (int j = 0; j < height; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * width;
    for (int i = 0; i < width; ++i) {
      const std::size_t p = row + i;
      double d = 0.0;
      if (i + 1 < width) d += gx[p];
      if (i > 0) d -= gx[p - 1];
      if (j + 1 < height) d += gy[p];
      if (j > 0) d -= gy[p - width];
      div[p] = d;
    }
  }
}

GradientField gradient(const Image& u) {
  GradientField g{Image(u.width(), u.height()), Image(u.width(), u.height())};
  gradient(u.data(), u.width(), u.height(), g.gx.data(), g.gy.data());
  return g;
}

Image divergence(const GradientField& y) {
  if (!y.gx.sameShape(y.gy)) throw std::invalid_argument("divergence: component shapes differ");
  Image d(y.gx.width(), y.gx.height());
  divergence(y.gx.data(), y.gy.data(), y.gx.width(), y.gx.height(), d.data());
  return d;
}

SparseOperator buildDerivativeX(int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<Triplet> t;
  t.reserve(2 * n);
  for (int j = 0; j < height; ++j)
    for (int i = 0; i + 1 < width; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * width + i;
      t.push_back({p, p, -1.0});
      t.push_back({p, p + 1, 1.0});
    }
  return SparseOperator::fromTriplets(n, n, std::move(t));
}

SparseOperator buildDerivativeY(int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<Triplet> t;
  t.reserve(2 * n);
  for (int j = 0; j + 1 < height; ++j)
    for (int i = 0; i < width; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * width + i;
      t.push_back({p, p, -1.0});
      t.push_back({p, p + static_cast<std::size_t>(width), 1.0});
    }
  return SparseOperator::fromTriplets(n, n, std::move(t));
}

SparseOperator buildGradientMatrix(int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("buildGradientMatrix: dims must be >= 1");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  const auto dx = buildDerivativeX(width, height);
  const auto dy = buildDerivativeY(width, height);
  std::vector<Triplet> t;
  t.reserve(dx.nonZeros() + dy.nonZeros());
  for (const auto& [op, offset] : {std::pair{&dx, std::size_t{0}}, std::pair{&dy, n}}) {
    const auto start = op->rowStart();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t e = start[r]; e < start[r + 1]; ++e)
        t.push_back({offset + r, op->colIndex()[e], op->values()[e]});
  }
  return SparseOperator::fromTriplets(2 * n, n, std::move(t));
}

namespace {

// Rows of a separable Gaussian convolution with replicate boundary, sampled at
// every `step`-th pixel of the source grid.
SparseOperator gaussianRows(int width, int height, double sigma, int step, int outWidth, int outHeight) {
  const auto k = gaussianKernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(outWidth) * outHeight * k.size() * k.size());
  for (int oj = 0; oj < outHeight; ++oj)
    for (int oi = 0; oi < outWidth; ++oi) {
      const std::size_t row = static_cast<std::size_t>(oj) * outWidth + oi;
      const int ci = oi * step;
      const int cj = oj * step;
      for (int b = -radius; b <= radius; ++b) {
        const int sj = std::clamp(cj + b, 0, height - 1);
        for (int a = -radius; a <= radius; ++a) {
          const int si = std::clamp(ci + a, 0, width - 1);
          t.push_back({row, static_cast<std::size_t>(sj) * width + si, k[a + radius] * k[b + radius]});
        }
      }
    }
  return SparseOperator::fromTriplets(static_cast<std::size_t>(outWidth) * outHeight, n, std::move(t));
}

}  // namespace

ForwardOperator buildForwardOperator(OperatorKind kind, int width, int height, const ForwardParams& params) {
  if (width < 1 || height < 1) throw std::invalid_argument("buildForwardOperator: dims must be >= 1");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  ForwardOperator op;
  op.kind = kind;
  op.width = width;
  op.height = height;
  op.dataWidth = width;
  op.dataHeight = height;
  switch (kind) {
    case OperatorKind::Identity:
      op.matrix = SparseOperator::identity(n);
      break;
    case OperatorKind::Mask: {
      if (params.mask.size() != n) {
        throw std::invalid_argument("buildForwardOperator: mask has " + std::to_string(params.mask.size()) +
                                    " entries, expected " + std::to_string(n));
      }
      std::vector<Triplet> t;
      for (std::size_t p = 0; p < n; ++p) {
        if (params.mask[p] != 0) {
          t.push_back({op.observedPixels.size(), p, 1.0});
          op.observedPixels.push_back(p);
        }
      }
      if (op.observedPixels.empty()) throw std::invalid_argument("buildForwardOperator: mask observes no pixel");
      op.matrix = SparseOperator::fromTriplets(op.observedPixels.size(), n, std::move(t));
      break;
    }
    case OperatorKind::Subsample: {
      if (params.factor < 1) throw std::invalid_argument("buildForwardOperator: subsample factor must be >= 1");
      op.dataWidth = (width + params.factor - 1) / params.factor;
      op.dataHeight = (height + params.factor - 1) / params.factor;
      op.matrix = gaussianRows(width, height, 0.5 * params.factor, params.factor, op.dataWidth, op.dataHeight);
      break;
    }
    case OperatorKind::Blur: {
      if (!(params.blurSigma > 0.0) || !std::isfinite(params.blurSigma)) {
        throw std::invalid_argument("buildForwardOperator: blur sigma must be > 0");
      }
      op.matrix = gaussianRows(width, height, params.blurSigma, 1, width, height);
      break;
    }
  }
  return op;
}

std::vector<double> ForwardOperator::observe(const Image& f) const {
  if (f.width() != dataWidth || f.height() != dataHeight) {
    throw std::invalid_argument("ForwardOperator::observe: frame is " + std::to_string(f.width()) + "x" +
                                std::to_string(f.height()) + ", expected " + std::to_string(dataWidth) + "x" +
                                std::to_string(dataHeight));
  }
  if (kind != OperatorKind::Mask) return f.values();
  std::vector<double> d(observedPixels.size());
  for (std::size_t r = 0; r < observedPixels.size(); ++r) d[r] = f[observedPixels[r]];
  return d;
}

Image ForwardOperator::embed(std::span<const double> data) const {
  if (data.size() != matrix.rows()) throw std::invalid_argument("ForwardOperator::embed: size mismatch");
  if (kind != OperatorKind::Mask) return Image(dataWidth, dataHeight, std::vector<double>(data.begin(), data.end()));
  Image out(dataWidth, dataHeight);
  for (std::size_t r = 0; r < observedPixels.size(); ++r) out[observedPixels[r]] = data[r];
  return out;
}

std::pair<int, int> reconstructionSize(OperatorKind kind, int dataWidth, int dataHeight, int factor) {
  if (kind == OperatorKind::Subsample) return {dataWidth * factor, dataHeight * factor};
  return {dataWidth, dataHeight};
}

}  // namespace jointflow
