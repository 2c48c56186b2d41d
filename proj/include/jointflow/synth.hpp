#pragma once

#include <cstdint>
#include <vector>

#include "jointflow/image.hpp"

namespace jointflow {

struct Blob {
  double cx = 0.0;
  double cy = 0.0;
  double sigma = 1.0;
  double amplitude = 1.0;
};

enum class SynthMotion { Translate, Rotate };

/// Analytic scene I(x) = background + sum_b amplitude_b exp(-|x - c_b|^2 / (2 sigma_b^2)) moving
/// rigidly from frame to frame.
struct SynthSpec {
  int width = 64;
  int height = 64;
  int frames = 5;
  SynthMotion motion = SynthMotion::Translate;
  double dx = 2.0;      // translation per frame, pixels
  double dy = 1.0;
  double angle = 0.05;  // rotation per frame about the image centre, radians
  double background = 0.0;
  std::vector<Blob> blobs;
};

struct SyntheticSequence {
  ImageSequence frames;
  FlowSequence flows;  // exact: frames[t+1](x + flows[t](x)) == frames[t](x)
};

SyntheticSequence renderSequence(const SynthSpec& spec);

/// `count` blobs with seeded random centres, widths and amplitudes inside the frame.
std::vector<Blob> randomBlobs(int count, int width, int height, std::uint64_t seed);

/// Intensity of the static scene at a continuous position.
double sceneValue(const SynthSpec& spec, double x, double y);

}  // namespace jointflow
