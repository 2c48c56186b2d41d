#include "jointflow/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>

namespace jointflow {

namespace fs = std::filesystem;

void writeFileAtomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path() && !path.parent_path().empty()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string readFileBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string lowerExtension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Header tokenizer that skips whitespace and '#' comments.
class PnmHeader {
 public:
  explicit PnmHeader(const std::string& bytes) : bytes_(bytes) {}

  std::string token() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) && bytes_[pos_] != '#') ++pos_;
    if (start == pos_) throw IoError("PGM: truncated header");
    return bytes_.substr(start, pos_ - start);
  }

  long number() {
    const auto t = token();
    if (!std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw IoError("PGM: malformed header field '" + t + "'");
    }
    return std::stol(t);
  }

  // exactly one whitespace byte separates the header from binary data
  std::size_t dataStart() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw IoError("PGM: missing separator before pixel data");
    }
    return pos_ + 1;
  }

  std::size_t position() const { return pos_; }

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t quantize(double x, std::uint32_t maxval) {
  const double c = std::clamp(std::isfinite(x) ? x : 0.0, 0.0, 1.0);
  return static_cast<std::uint32_t>(std::lround(c * maxval));
}

struct PngBuffer {
  const std::string* bytes = nullptr;
  std::size_t pos = 0;
  std::string out;
};

void pngRead(png_structp png, png_bytep data, png_size_t length) {
  auto* buf = static_cast<PngBuffer*>(png_get_io_ptr(png));
  if (buf->pos + length > buf->bytes->size()) png_error(png, "truncated PNG stream");
  std::copy_n(buf->bytes->data() + buf->pos, length, data);
  buf->pos += length;
}

void pngWrite(png_structp png, png_bytep data, png_size_t length) {
  auto* buf = static_cast<PngBuffer*>(png_get_io_ptr(png));
  buf->out.append(reinterpret_cast<const char*>(data), length);
}

void pngFlush(png_structp) {}

[[noreturn]] void pngFail(png_structp png, png_const_charp message) {
  auto* msg = static_cast<std::string*>(png_get_error_ptr(png));
  if (msg) *msg = message;
  png_longjmp(png, 1);
}

Image decodePng(const std::string& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw IoError("PNG: bad signature");
  }
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, pngFail, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG: cannot allocate decoder");
  }
  PngBuffer buf;
  buf.bytes = &bytes;
  // objects with destructors must exist before setjmp so a longjmp never skips them
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG: " + error);
  }
  png_set_read_fn(png, &buf, pngRead);
  png_read_info(png, info);
  const int colorType = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (colorType == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (colorType == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (colorType & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (colorType == PNG_COLOR_TYPE_RGB || colorType == PNG_COLOR_TYPE_RGB_ALPHA || colorType == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  if (depth == 16) png_set_swap(png);  // host little-endian 16-bit samples
  png_read_update_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t rowBytes = png_get_rowbytes(png, info);
  if (png_get_channels(png, info) != 1) png_error(png, "unsupported channel layout after conversion");
  pixels.resize(rowBytes * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + r * rowBytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<int>(width), static_cast<int>(height));
  for (png_uint_32 j = 0; j < height; ++j)
    for (png_uint_32 i = 0; i < width; ++i) {
      if (depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, pixels.data() + j * rowBytes + 2 * i, 2);
        img.at(static_cast<int>(i), static_cast<int>(j)) = v / 65535.0;
      } else {
        img.at(static_cast<int>(i), static_cast<int>(j)) = pixels[j * rowBytes + i] / 255.0;
      }
    }
  return img;
}

std::string encodePng(const Image& image, int bitDepth) {
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, pngFail, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG: cannot allocate encoder");
  }
  PngBuffer buf;
  const std::uint32_t maxval = bitDepth == 16 ? 65535u : 255u;
  const std::size_t rowBytes = static_cast<std::size_t>(image.width()) * (bitDepth / 8);
  std::vector<std::uint8_t> pixels(rowBytes * image.height());
  for (int j = 0; j < image.height(); ++j)
    for (int i = 0; i < image.width(); ++i) {
      const auto q = quantize(image.at(i, j), maxval);
      if (bitDepth == 16) {
        pixels[j * rowBytes + 2 * i] = static_cast<std::uint8_t>(q >> 8);
        pixels[j * rowBytes + 2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
      } else {
        pixels[j * rowBytes + i] = static_cast<std::uint8_t>(q);
      }
    }
  std::vector<png_bytep> rows(image.height());
  for (int r = 0; r < image.height(); ++r) rows[r] = pixels.data() + r * rowBytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG: " + error);
  }
  png_set_write_fn(png, &buf, pngWrite, pngFlush);
  png_set_IHDR(png, info, image.width(), image.height(), bitDepth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return buf.out;
}

}  // namespace

Image decodePgm(const std::string& bytes) {
  PnmHeader header(bytes);
  const std::string magic = header.token();
  if (magic != "P2" && magic != "P5") throw IoError("PGM: unsupported magic '" + magic + "'");
  const long width = header.number();
  const long height = header.number();
  const long maxval = header.number();
  if (width < 1 || height < 1) throw IoError("PGM: empty image");
  if (maxval < 1 || maxval > 65535) throw IoError("PGM: unsupported maxval " + std::to_string(maxval));

  Image img(static_cast<int>(width), static_cast<int>(height));
  const std::size_t count = img.size();
  if (magic == "P5") {
    const std::size_t start = header.dataStart();
    const std::size_t bytesPer = maxval > 255 ? 2 : 1;
    if (bytes.size() < start + count * bytesPer) throw IoError("PGM: truncated pixel data");
    for (std::size_t p = 0; p < count; ++p) {
      const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + start + p * bytesPer);
      const unsigned v = bytesPer == 2 ? (unsigned{b[0]} << 8) | b[1] : b[0];
      if (v > static_cast<unsigned>(maxval)) throw IoError("PGM: sample exceeds maxval");
      img[p] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  } else {
    for (std::size_t p = 0; p < count; ++p) {
      const long v = header.number();
      if (v > maxval) throw IoError("PGM: sample exceeds maxval");
      img[p] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  return img;
}

std::string encodePgm(const Image& image, int bitDepth, PgmEncoding encoding) {
  if (bitDepth != 8 && bitDepth != 16) throw IoError("PGM: bit depth must be 8 or 16");
  if (image.empty()) throw IoError("PGM: empty image");
  const std::uint32_t maxval = bitDepth == 16 ? 65535u : 255u;
  std::string out = (encoding == PgmEncoding::Binary ? "P5\n" : "P2\n") + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n" + std::to_string(maxval) + "\n";
  for (std::size_t p = 0; p < image.size(); ++p) {
    const auto q = quantize(image[p], maxval);
    if (encoding == PgmEncoding::Ascii) {
      out += std::to_string(q);
      out += (p + 1) % static_cast<std::size_t>(image.width()) == 0 ? '\n' : ' ';
    } else if (bitDepth == 16) {
      out.push_back(static_cast<char>(q >> 8));
      out.push_back(static_cast<char>(q & 0xff));
    } else {
      out.push_back(static_cast<char>(q));
    }
  }
  return out;
}

Image readImage(const fs::path& path) {
  const auto bytes = readFileBytes(path);
  try {
    return lowerExtension(path) == ".png" ? decodePng(bytes) : decodePgm(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void writeImage(const fs::path& path, const Image& image, int bitDepth) {
  if (bitDepth != 8 && bitDepth != 16) throw IoError("writeImage: bit depth must be 8 or 16");
  const auto ext = lowerExtension(path);
  if (ext != ".png" && ext != ".pgm") throw IoError("writeImage: " + path.string() + ": expected .pgm or .png");
  writeFileAtomic(path, ext == ".png" ? encodePng(image, bitDepth) : encodePgm(image, bitDepth));
}

std::string encodePpm(const RgbImage& image) {
  if (image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw IoError("PPM: pixel buffer size mismatch");
  }
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
  return out;
}

void writePpm(const fs::path& path, const RgbImage& image) { writeFileAtomic(path, encodePpm(image)); }

std::vector<fs::path> listFrameFiles(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = lowerExtension(entry.path());
    if (ext == ".pgm" || ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace jointflow
