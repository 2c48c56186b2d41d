#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "jointflow/image.hpp"

namespace jointflow {

/// Raised for unreadable, malformed or unsupported files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes `bytes` to a temporary sibling and renames it over `path`.
void writeFileAtomic(const std::filesystem::path& path, const std::string& bytes);
std::string readFileBytes(const std::filesystem::path& path);

enum class PgmEncoding { Binary, Ascii };

/// Grayscale PGM (P2/P5, 8 or 16 bit) or PNG, chosen by extension; decoded to [0, 1].
Image readImage(const std::filesystem::path& path);
Image decodePgm(const std::string& bytes);

/// Values are clamped to [0, 1] and quantized to `bitDepth` (8 or 16) bits.
void writeImage(const std::filesystem::path& path, const Image& image, int bitDepth = 16);
std::string encodePgm(const Image& image, int bitDepth = 16, PgmEncoding encoding = PgmEncoding::Binary);

/// Interleaved 8-bit RGB image written as binary PPM (P6).
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};
void writePpm(const std::filesystem::path& path, const RgbImage& image);
std::string encodePpm(const RgbImage& image);

/// Frame files (.pgm/.png) in a directory, sorted by name.
std::vector<std::filesystem::path> listFrameFiles(const std::filesystem::path& dir);

}  // namespace jointflow
