#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "jointflow/image.hpp"

namespace jointflow {

/// Mean squared error sum (u - ref)^2 / N.
double l2Error(const Image& u, const Image& ref);

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Image& u, const Image& ref, double peak = 1.0);

/// Gaussian-window SSIM (11x11, sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1) averaged
/// over window positions fully inside the image. Requires both dims >= 11.
double ssim(const Image& u, const Image& ref);

/// Pixels whose ground-truth flow is usable (both components finite and |.| <= 1e9).
std::vector<std::uint8_t> validFlowMask(const FlowField& flow);

/// Mean endpoint error over pixels where `mask` is nonzero (all pixels when empty).
double endpointError(const FlowField& v, const FlowField& ref, const std::vector<std::uint8_t>& mask = {});

/// Mean space-time angle between (v1, v2, 1) and (w1, w2, 1), in radians.
double angularError(const FlowField& v, const FlowField& ref, const std::vector<std::uint8_t>& mask = {});

/// Adds i.i.d. N(mean, variance) noise from a seeded generator; no clipping.
ImageSequence addGaussianNoise(const ImageSequence& f, double mean, double variance, std::uint64_t seed);

/// Frame-averaged reconstruction metrics of a sequence against its reference.
struct SequenceMetrics {
  double ssim = 0.0;
  double l2 = 0.0;
  double psnr = 0.0;
  double psnr255 = 0.0;
};
SequenceMetrics sequenceMetrics(const ImageSequence& u, const ImageSequence& ref);

}  // namespace jointflow
