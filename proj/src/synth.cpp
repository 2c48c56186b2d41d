#include "jointflow/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace jointflow {

double sceneValue(const SynthSpec& spec, double x, double y) {
  double v = spec.background;
  for (const auto& b : spec.blobs) {
    const double dx = x - b.cx;
    const double dy = y - b.cy;
    v += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
  }
  return v;
}

SyntheticSequence renderSequence(const SynthSpec& spec) {
  if (spec.width < 1 || spec.height < 1 || spec.frames < 2) {
    throw std::invalid_argument("renderSequence: need a non-empty grid and at least two frames");
  }
  const double cx = 0.5 * (spec.width - 1);
  const double cy = 0.5 * (spec.height - 1);
  SyntheticSequence out;
  for (int t = 0; t < spec.frames; ++t) {
    Image frame(spec.width, spec.height);
    for (int j = 0; j < spec.height; ++j)
      for (int i = 0; i < spec.width; ++i) {
        double x = i, y = j;
        if (spec.motion == SynthMotion::Translate) {
          x -= t * spec.dx;
          y -= t * spec.dy;
        } else {
          // inverse rotation by t * angle about the centre
          const double c = std::cos(-t * spec.angle);
          const double s = std::sin(-t * spec.angle);
          x = cx + c * (i - cx) - s * (j - cy);
          y = cy + s * (i - cx) + c * (j - cy);
        }
        frame.at(i, j) = sceneValue(spec, x, y);
      }
    out.frames.frames.push_back(std::move(frame));
  }
  for (int t = 0; t + 1 < spec.frames; ++t) {
    FlowField v(spec.width, spec.height);
    for (int j = 0; j < spec.height; ++j)
      for (int i = 0; i < spec.width; ++i) {
        if (spec.motion == SynthMotion::Translate) {
          v.v1.at(i, j) = spec.dx;
          v.v2.at(i, j) = spec.dy;
        } else {
          const double c = std::cos(spec.angle);
          const double s = std::sin(spec.angle);
          v.v1.at(i, j) = cx + c * (i - cx) - s * (j - cy) - i;
          v.v2.at(i, j) = cy + s * (i - cx) + c * (j - cy) - j;
        }
      }
    out.flows.fields.push_back(std::move(v));
  }
  return out;
}

std::vector<Blob> randomBlobs(int count, int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Blob> blobs;
  const double scale = std::min(width, height);
  for (int k = 0; k < count; ++k) {
    Blob b;
    b.cx = (0.2 + 0.6 * unit(rng)) * (width - 1);
    b.cy = (0.2 + 0.6 * unit(rng)) * (height - 1);
    b.sigma = (0.06 + 0.08 * unit(rng)) * scale;
    b.amplitude = 0.4 + 0.6 * unit(rng);
    blobs.push_back(b);
  }
  return blobs;
}

}  // namespace jointflow
