#include "jointflow/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace jointflow {

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("Image: negative dimensions");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0) throw std::invalid_argument("Image: negative dimensions");
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("Image: data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(width) + "x" +
                                std::to_string(height));
  }
}

bool Image::allFinite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

FlowField::FlowField(Image horizontal, Image vertical)
    : v1(std::move(horizontal)), v2(std::move(vertical)) {
  if (!v1.sameShape(v2)) throw std::invalid_argument("FlowField: component shapes differ");
}

void ImageSequence::validate() const {
  if (frames.empty()) throw std::invalid_argument("ImageSequence: no frames");
  if (frames.front().empty()) throw std::invalid_argument("ImageSequence: empty frame");
  for (const auto& f : frames) {
    if (!f.sameShape(frames.front())) {
      throw std::invalid_argument("ImageSequence: frames have different dimensions");
    }
  }
}

std::vector<double> ImageSequence::stacked() const {
  std::vector<double> out;
  out.reserve(count() * pixelsPerFrame());
  for (const auto& f : frames) out.insert(out.end(), f.values().begin(), f.values().end());
  return out;
}

ImageSequence ImageSequence::fromStacked(std::span<const double> values, int width, int height,
                                         std::size_t count) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (values.size() != n * count) throw std::invalid_argument("fromStacked: size mismatch");
  ImageSequence seq;
  seq.frames.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    auto first = values.begin() + static_cast<std::ptrdiff_t>(t * n);
    seq.frames.emplace_back(width, height, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n)));
  }
  return seq;
}

FlowSequence FlowSequence::zeros(std::size_t count, int width, int height) {
  FlowSequence s;
  s.fields.assign(count, FlowField(width, height));
  return s;
}

std::vector<double> FlowSequence::stacked() const {
  std::vector<double> out;
  for (const auto& f : fields) {
    out.insert(out.end(), f.v1.values().begin(), f.v1.values().end());
    out.insert(out.end(), f.v2.values().begin(), f.v2.values().end());
  }
  return out;
}

}  // namespace jointflow
