#include "dynodom/png_io.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include <png.h>

namespace dynodom {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

// Decoded image, normalized to 8- or 16-bit samples with `channels` per pixel.
struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;
};

Decoded decode(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error,
                                           png_error_fn, png_warning_fn);
  if (!png) throw IoError("png: out of memory reading " + path.string());
  png_infop info = png_create_info_struct(png);
  Decoded out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: cannot decode " + path.string() + ": " + error);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // host little-endian samples
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * out.height);
  rows.resize(out.height);
  for (int r = 0; r < out.height; ++r) rows[r] = out.bytes.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, int color_type,
            int bit_depth, const std::vector<const std::uint8_t*>& rows) {
  FilePtr f = open_file(path, "wb");
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error,
                                            png_error_fn, png_warning_fn);
  if (!png) throw IoError("png: out of memory writing " + path.string());
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: cannot encode " + path.string() + ": " + error);
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  for (const std::uint8_t* row : rows) png_write_row(png, row);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageOf<std::uint16_t> read_png_u16(const std::filesystem::path& path) {
  const Decoded d = decode(path);
  if (d.channels != 1) {
    throw IoError("png: expected single-channel image in " + path.string());
  }
  ImageOf<std::uint16_t> img(d.height, d.width);
  if (d.bit_depth == 16) {
    std::memcpy(img.data(), d.bytes.data(), d.bytes.size());
  } else {
    for (int i = 0; i < d.width * d.height; ++i) img.data()[i] = d.bytes[i];
  }
  return img;
}

ColorImage read_png_rgb(const std::filesystem::path& path) {
  const Decoded d = decode(path);
  ColorImage img(d.width, d.height);
  const int step = d.bit_depth == 16 ? 2 : 1;
  auto sample = [&](std::size_t idx) -> std::uint8_t {
    // 16-bit samples were swapped to little-endian; the high byte is idx+1.
    return step == 2 ? d.bytes[idx * 2 + 1] : d.bytes[idx];
  };
  for (std::size_t p = 0; p < std::size_t(d.width) * d.height; ++p) {
    std::uint8_t* px = &img.rgb[p * 3];
    const std::size_t base = p * d.channels;
    if (d.channels >= 3) {
      px[0] = sample(base);
      px[1] = sample(base + 1);
      px[2] = sample(base + 2);
    } else {
      px[0] = px[1] = px[2] = sample(base);
    }
  }
  return img;
}

void write_png_u16(const std::filesystem::path& path, const ImageOf<std::uint16_t>& image) {
  std::vector<const std::uint8_t*> rows(image.rows());
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    rows[r] = reinterpret_cast<const std::uint8_t*>(image.data() + r * image.cols());
  }
  encode(path, static_cast<int>(image.cols()), static_cast<int>(image.rows()),
         PNG_COLOR_TYPE_GRAY, 16, rows);
}

void write_png_rgb(const std::filesystem::path& path, const ColorImage& image) {
  std::vector<const std::uint8_t*> rows(image.height);
  for (int r = 0; r < image.height; ++r) rows[r] = image.rgb.data() + std::size_t(r) * image.width * 3;
  encode(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

GrayImage to_gray(const ColorImage& color) {
  GrayImage gray(color.height, color.width);
  for (int v = 0; v < color.height; ++v) {
    for (int u = 0; u < color.width; ++u) {
      const std::uint8_t* p = color.at(u, v);
      gray(v, u) = static_cast<std::uint8_t>((299 * p[0] + 587 * p[1] + 114 * p[2] + 500) / 1000);
    }
  }
  return gray;
}

}  // namespace dynodom
