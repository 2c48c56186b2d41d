#include "jointflow/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <numbers>
#include <random>
#include <stdexcept>

namespace jointflow {

namespace {

void requireSameShape(const Image& a, const Image& b, const char* who) {
  if (!a.sameShape(b)) throw std::invalid_argument(std::string(who) + ": image shapes differ");
}

void requireSameShape(const FlowField& a, const FlowField& b, const std::vector<std::uint8_t>& mask, const char* who) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument(std::string(who) + ": flow shapes differ");
  }
  if (!mask.empty() && mask.size() != a.size()) throw std::invalid_argument(std::string(who) + ": mask size mismatch");
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

}  // namespace

double l2Error(const Image& u, const Image& ref) {
  requireSameShape(u, ref, "l2Error");
  if (u.empty()) throw std::invalid_argument("l2Error: empty image");
  double s = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) s += (u[p] - ref[p]) * (u[p] - ref[p]);
  return s / static_cast<double>(u.size());
}

double psnr(const Image& u, const Image& ref, double peak) {
  const double mse = l2Error(u, ref);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& u, const Image& ref) {
  requireSameShape(u, ref, "ssim");
  const int w = u.width();
  const int h = u.height();
  if (w < kSsimWindow || h < kSsimWindow) throw std::invalid_argument("ssim: images must be at least 11x11");

  std::array<double, kSsimWindow * kSsimWindow> window{};
  double sum = 0.0;
  for (int b = 0; b < kSsimWindow; ++b)
    for (int a = 0; a < kSsimWindow; ++a) {
      const double dx = a - kSsimWindow / 2;
      const double dy = b - kSsimWindow / 2;
      window[b * kSsimWindow + a] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
      sum += window[b * kSsimWindow + a];
    }
  for (auto& x : window) x /= sum;

  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double total = 0.0;
  int count = 0;
  for (int j = 0; j + kSsimWindow <= h; ++j)
    for (int i = 0; i + kSsimWindow <= w; ++i) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (int b = 0; b < kSsimWindow; ++b)
        for (int a = 0; a < kSsimWindow; ++a) {
          const double g = window[b * kSsimWindow + a];
          const double x = u.at(i + a, j + b);
          const double y = ref.at(i + a, j + b);
          mx += g * x;
          my += g * y;
          xx += g * x * x;
          yy += g * y * y;
          xy += g * x * y;
        }
      const double vx = xx - mx * mx;
      const double vy = yy - my * my;
      const double cov = xy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / count;
}

std::vector<std::uint8_t> validFlowMask(const FlowField& flow) {
  std::vector<std::uint8_t> mask(flow.size());
  for (std::size_t p = 0; p < flow.size(); ++p) {
    const double a = flow.v1[p];
    const double b = flow.v2[p];
    mask[p] = std::isfinite(a) && std::isfinite(b) && std::abs(a) <= 1e9 && std::abs(b) <= 1e9;
  }
  return mask;
}

double endpointError(const FlowField& v, const FlowField& ref, const std::vector<std::uint8_t>& mask) {
  requireSameShape(v, ref, mask, "endpointError");
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    if (!mask.empty() && !mask[p]) continue;
    s += std::hypot(v.v1[p] - ref.v1[p], v.v2[p] - ref.v2[p]);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("endpointError: mask selects no pixel");
  return s / static_cast<double>(count);
}

double angularError(const FlowField& v, const FlowField& ref, const std::vector<std::uint8_t>& mask) {
  requireSameShape(v, ref, mask, "angularError");
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    if (!mask.empty() && !mask[p]) continue;
    const double a1 = v.v1[p], a2 = v.v2[p];
    const double b1 = ref.v1[p], b2 = ref.v2[p];
    // angle between (a1, a2, 1) and (b1, b2, 1); atan2 stays exact near zero where acos does not
    const double cx = a2 - b2, cy = b1 - a1, cz = a1 * b2 - a2 * b1;
    s += std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), a1 * b1 + a2 * b2 + 1.0);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("angularError: mask selects no pixel");
  return s / static_cast<double>(count);
}

ImageSequence addGaussianNoise(const ImageSequence& f, double mean, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0)) throw std::invalid_argument("addGaussianNoise: variance must be >= 0");
  ImageSequence out = f;
  if (variance == 0.0 && mean == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(mean, std::sqrt(variance));
  for (auto& frame : out.frames)
    for (auto& x : frame.data()) x += noise(rng);
  return out;
}

SequenceMetrics sequenceMetrics(const ImageSequence& u, const ImageSequence& ref) {
  if (u.count() != ref.count() || u.count() == 0) throw std::invalid_argument("sequenceMetrics: frame counts differ");
  SequenceMetrics m;
  for (std::size_t t = 0; t < u.count(); ++t) {
    m.ssim += ssim(u.frames[t], ref.frames[t]);
    m.l2 += l2Error(u.frames[t], ref.frames[t]);
    m.psnr += psnr(u.frames[t], ref.frames[t], 1.0);
    m.psnr255 += psnr(u.frames[t], ref.frames[t], 255.0);
  }
  const double n = static_cast<double>(u.count());
  m.ssim /= n;
  m.l2 /= n;
  m.psnr /= n;
  m.psnr255 /= n;
  return m;
}

}  // namespace jointflow
