#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jointflow {

/// Single scalar frame on the grid {(i, j) : i = 0..width-1, j = 0..height-1}.
/// `i` is the horizontal axis; storage is row-major, index = j * width + i.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(i);
  }
  double& at(int i, int j) { return data_[index(i, j)]; }
  double at(int i, int j) const { return data_[index(i, j)]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool sameShape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool allFinite() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Displacement field; v1 is horizontal, v2 vertical, both in pixels.
struct FlowField {
  Image v1;
  Image v2;

  FlowField() = default;
  FlowField(int width, int height) : v1(width, height), v2(width, height) {}
  FlowField(Image horizontal, Image vertical);

  int width() const { return v1.width(); }
  int height() const { return v1.height(); }
  std::size_t size() const { return v1.size(); }
  bool allFinite() const { return v1.allFinite() && v2.allFinite(); }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

struct ImageSequence {
  std::vector<Image> frames;

  std::size_t count() const { return frames.size(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  std::size_t pixelsPerFrame() const { return frames.empty() ? 0 : frames.front().size(); }

  /// Throws std::invalid_argument unless all frames share one non-empty shape.
  void validate() const;

  /// Concatenates all frames into one vector, frame-major.
  std::vector<double> stacked() const;
  static ImageSequence fromStacked(std::span<const double> values, int width, int height, std::size_t count);

  friend bool operator==(const ImageSequence&, const ImageSequence&) = default;
};

struct FlowSequence {
  std::vector<FlowField> fields;

  std::size_t count() const { return fields.size(); }

  static FlowSequence zeros(std::size_t count, int width, int height);
  std::vector<double> stacked() const;

  friend bool operator==(const FlowSequence&, const FlowSequence&) = default;
};

}  // namespace jointflow
