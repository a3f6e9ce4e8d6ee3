#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "vitalspec/error.hpp"
#include "vitalspec/stft.hpp"

namespace vitalspec {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::string& path, const SpectroImage& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw ValidationError("cannot write " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng error while writing " + path);
  }

  std::vector<png_byte> bytes(kImageSize * kImageSize);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const float p = std::clamp(img.pixels[i], 0.0f, 1.0f);
    bytes[i] = static_cast<png_byte>(std::lround(p * 255.0f));
  }
  std::vector<png_bytep> rows(kImageSize);
  for (std::size_t r = 0; r < kImageSize; ++r) rows[r] = bytes.data() + r * kImageSize;

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, kImageSize, kImageSize, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

SpectroImage read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw ValidationError("cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError("cannot decode PNG " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (width != kImageSize || height != kImageSize || color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError(path + " is not a 128x128 8-bit grayscale PNG");
  }
  std::vector<png_byte> bytes(kImageSize * kImageSize);
  std::vector<png_bytep> rows(kImageSize);
  for (std::size_t r = 0; r < kImageSize; ++r) rows[r] = bytes.data() + r * kImageSize;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  SpectroImage img;
  img.provenance = path;
  for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = static_cast<float>(bytes[i]) / 255.0f;
  return img;
}

}  // namespace vitalspec
