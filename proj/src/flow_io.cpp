#include "jointflow/flow_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "jointflow/metrics.hpp"

namespace jointflow {

namespace {

static_assert(std::endian::native == std::endian::little, ".flo I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.append(raw, sizeof(T));
}

template <typename T>
T get(const std::string& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

FlowField decodeFlo(const std::string& bytes) {
  if (bytes.size() < 12) throw IoError(".flo: file shorter than its header");
  if (get<float>(bytes, 0) != kFloTag) throw IoError(".flo: bad sanity tag (wrong format or endianness)");
  const auto width = get<std::int32_t>(bytes, 4);
  const auto height = get<std::int32_t>(bytes, 8);
  if (width < 1 || height < 1 || width > 99999 || height > 99999) {
    throw IoError(".flo: implausible size " + std::to_string(width) + "x" + std::to_string(height));
  }
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() != 12 + 8 * n) {
    throw IoError(".flo: expected " + std::to_string(12 + 8 * n) + " bytes, found " + std::to_string(bytes.size()));
  }
  FlowField flow(width, height);
  for (std::size_t p = 0; p < n; ++p) {
    flow.v1[p] = get<float>(bytes, 12 + 8 * p);
    flow.v2[p] = get<float>(bytes, 16 + 8 * p);
  }
  return flow;
}

std::string encodeFlo(const FlowField& flow) {
  if (flow.size() == 0) throw IoError(".flo: empty flow field");
  std::string out;
  out.reserve(12 + 8 * flow.size());
  put(out, kFloTag);
  put(out, static_cast<std::int32_t>(flow.width()));
  put(out, static_cast<std::int32_t>(flow.height()));
  for (std::size_t p = 0; p < flow.size(); ++p) {
    put(out, static_cast<float>(flow.v1[p]));
    put(out, static_cast<float>(flow.v2[p]));
  }
  return out;
}

FlowField readFlo(const std::filesystem::path& path) {
  try {
    return decodeFlo(readFileBytes(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void writeFlo(const std::filesystem::path& path, const FlowField& flow) { writeFileAtomic(path, encodeFlo(flow)); }

std::array<std::uint8_t, 3> flowVectorColor(double v1, double v2, double maxMagnitude) {
  const double mag = std::hypot(v1, v2);
  const double sat = maxMagnitude > 0.0 ? std::min(1.0, mag / maxMagnitude) : 0.0;
  double hue = std::atan2(v2, v1) * 180.0 / std::numbers::pi;
  if (hue < 0.0) hue += 360.0;
  // HSV -> RGB with V = 1
  const double c = sat;
  const double hp = hue / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = 1.0 - c;
  auto byte = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  return {byte(r + m), byte(g + m), byte(b + m)};
}

RgbImage flowToColor(const FlowField& flow, std::optional<double> maxMagnitude) {
  const auto valid = validFlowMask(flow);
  double maxMag = 0.0;
  if (maxMagnitude) {
    maxMag = *maxMagnitude;
  } else {
    std::vector<double> mags;
    for (std::size_t p = 0; p < flow.size(); ++p)
      if (valid[p]) mags.push_back(std::hypot(flow.v1[p], flow.v2[p]));
    if (!mags.empty()) {
      const auto k = static_cast<std::size_t>(std::floor(0.99 * static_cast<double>(mags.size() - 1)));
      std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
      maxMag = mags[k];
    }
  }
  if (!(maxMag > 0.0)) maxMag = 1.0;

  RgbImage img{flow.width(), flow.height(), std::vector<std::uint8_t>(3 * flow.size(), 0)};
  for (std::size_t p = 0; p < flow.size(); ++p) {
    if (!valid[p]) continue;
    const auto c = flowVectorColor(flow.v1[p], flow.v2[p], maxMag);
    std::copy(c.begin(), c.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(3 * p));
  }
  return img;
}

}  // namespace jointflow
