#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "jointflow/image.hpp"
#include "jointflow/image_io.hpp"

namespace jointflow {

/// Sanity tag at the start of every Middlebury .flo file.
inline constexpr float kFloTag = 202021.25f;

/// Little-endian .flo: float tag, int32 width, int32 height, then row-major (v1, v2) float32
/// pairs. Components with magnitude > 1e9 mark unknown flow (see validFlowMask).
FlowField readFlo(const std::filesystem::path& path);
FlowField decodeFlo(const std::string& bytes);
void writeFlo(const std::filesystem::path& path, const FlowField& flow);
std::string encodeFlo(const FlowField& flow);

/// HSV rendering: hue = atan2(v2, v1), saturation = min(1, |v| / maxMagnitude), value = 1.
/// Unknown-flow pixels are black. Without `maxMagnitude` the 99th-percentile magnitude is used.
RgbImage flowToColor(const FlowField& flow, std::optional<double> maxMagnitude = std::nullopt);

/// RGB of a single flow vector under the same colour map.
std::array<std::uint8_t, 3> flowVectorColor(double v1, double v2, double maxMagnitude);

}  // namespace jointflow
