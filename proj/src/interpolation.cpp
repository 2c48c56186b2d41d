#include "jointflow/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jointflow {

double cubic1d(double p0, double p1, double p2, double p3, double x) {
  return (-0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3) * x * x * x +
         (p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3) * x * x + (-0.5 * p0 + 0.5 * p2) * x + p1;
}

std::array<double, 4> cubicWeights(double x) {
  const double x2 = x * x;
  const double x3 = x2 * x;
  return {-0.5 * x3 + x2 - 0.5 * x, 1.5 * x3 - 2.5 * x2 + 1.0, -1.5 * x3 + 2.0 * x2 + 0.5 * x,
          0.5 * x3 - 0.5 * x2};
}

std::optional<BicubicStencil> bicubicStencil(int width, int height, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw std::invalid_argument("bicubicStencil: non-finite sample position");
  }
  const double fxFloor = std::floor(x);
  const double fyFloor = std::floor(y);
  // compare in floating point first so huge displacements cannot overflow int
  if (fxFloor - 1.0 < 0.0 || fyFloor - 1.0 < 0.0 || fxFloor + 2.0 > width - 1.0 ||
      fyFloor + 2.0 > height - 1.0) {
    return std::nullopt;
  }
  BicubicStencil s;
  s.i0 = static_cast<int>(fxFloor) - 1;
  s.j0 = static_cast<int>(fyFloor) - 1;
  s.fx = x - fxFloor;
  s.fy = y - fyFloor;
  return s;
}

std::optional<double> bicubicSample(const Image& u, double x, double y) {
  const auto s = bicubicStencil(u.width(), u.height(), x, y);
  if (!s) return std::nullopt;
  std::array<double, 4> column{};
  for (int k = 0; k < 4; ++k) {
    const int i = s->i0 + k;
    column[k] = cubic1d(u.at(i, s->j0), u.at(i, s->j0 + 1), u.at(i, s->j0 + 2), u.at(i, s->j0 + 3), s->fy);
  }
  return cubic1d(column[0], column[1], column[2], column[3], s->fx);
}

double bicubicSampleClamped(const Image& u, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw std::invalid_argument("bicubicSampleClamped: non-finite sample position");
  }
  const int w = u.width();
  const int h = u.height();
  const double xc = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const double yc = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int fi = static_cast<int>(std::floor(xc));
  const int fj = static_cast<int>(std::floor(yc));
  const double fx = xc - fi;
  const double fy = yc - fj;
  std::array<double, 4> column{};
  std::array<int, 4> rows{};
  for (int l = 0; l < 4; ++l) rows[l] = std::clamp(fj - 1 + l, 0, h - 1);
  for (int k = 0; k < 4; ++k) {
    const int i = std::clamp(fi - 1 + k, 0, w - 1);
    column[k] = cubic1d(u.at(i, rows[0]), u.at(i, rows[1]), u.at(i, rows[2]), u.at(i, rows[3]), fy);
  }
  return cubic1d(column[0], column[1], column[2], column[3], fx);
}

Image resampleBicubic(const Image& u, int newWidth, int newHeight) {
  if (newWidth < 1 || newHeight < 1) throw std::invalid_argument("resampleBicubic: target size must be >= 1");
  if (u.empty()) throw std::invalid_argument("resampleBicubic: empty image");
  const auto coordinate = [](int target, int from, int to) {
    if (to == 1) return 0.5 * (from - 1);
    return target * static_cast<double>(from - 1) / static_cast<double>(to - 1);
  };
  Image out(newWidth, newHeight);
  for (int j = 0; j < newHeight; ++j) {
    const double y = coordinate(j, u.height(), newHeight);
    for (int i = 0; i < newWidth; ++i) {
      out.at(i, j) = bicubicSampleClamped(u, coordinate(i, u.width(), newWidth), y);
    }
  }
  return out;
}

std::vector<double> gaussianKernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussianKernel: sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int a = -radius; a <= radius; ++a) {
    k[a + radius] = std::exp(-0.5 * a * a / (sigma * sigma));
    sum += k[a + radius];
  }
  for (auto& w : k) w /= sum;
  return k;
}

Image gaussianSmooth(const Image& u, double sigma) {
  const auto k = gaussianKernel(sigma);
  if (k.size() == 1) return u;
  const int radius = static_cast<int>(k.size() / 2);
  const int w = u.width();
  const int h = u.height();
  Image tmp(w, h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      double acc = 0.0;
      for (int a = -radius; a <= radius; ++a) acc += k[a + radius] * u.at(std::clamp(i + a, 0, w - 1), j);
      tmp.at(i, j) = acc;
    }
  Image out(w, h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      double acc = 0.0;
      for (int a = -radius; a <= radius; ++a) acc += k[a + radius] * tmp.at(i, std::clamp(j + a, 0, h - 1));
      out.at(i, j) = acc;
    }
  return out;
}

Image medianFilter(const Image& u, int size) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("medianFilter: size must be odd and positive");
  const int r = size / 2;
  const int w = u.width();
  const int h = u.height();
  Image out(w, h);
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>(size) * size);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      window.clear();
      for (int b = std::max(0, j - r); b <= std::min(h - 1, j + r); ++b)
        for (int a = std::max(0, i - r); a <= std::min(w - 1, i + r); ++a) window.push_back(u.at(a, b));
      const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
      std::nth_element(window.begin(), mid, window.end());
      double m = *mid;
      if (window.size() % 2 == 0) {
        // even count only happens on clipped borders; average the two middle values
        const double lower = *std::max_element(window.begin(), mid);
        m = 0.5 * (m + lower);
      }
      out.at(i, j) = m;
    }
  return out;
}

std::vector<LevelSize> buildPyramidSizes(int width, int height, double eta, int minDim) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("buildPyramidSizes: eta must lie in (0, 1)");
  if (width < 1 || height < 1) throw std::invalid_argument("buildPyramidSizes: empty image");
  std::vector<LevelSize> sizes{{width, height}};
  for (int s = 1;; ++s) {
    const double scale = std::pow(eta, s);
    const double w = width * scale;
    const double h = height * scale;
    if (w < minDim || h < minDim) break;
    const LevelSize next{std::max(1, static_cast<int>(std::lround(w))), std::max(1, static_cast<int>(std::lround(h)))};
    if (next.width < sizes.back().width && next.height < sizes.back().height) sizes.push_back(next);
  }
  return sizes;
}

}  // namespace jointflow
