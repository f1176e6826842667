#include "tee/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "tee/error.hpp"

namespace tee {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void quantize_image(FeatureMap<float>& image) {
  for (Eigen::Index j = 0; j < image.data.cols(); ++j)
    for (Eigen::Index i = 0; i < image.data.rows(); ++i)
      image.data(i, j) = dequantize_u8(quantize_u8(image.data(i, j)));
}

void write_png(const std::filesystem::path& path, const FeatureMap<float>& image) {
  require(image.channels == 3 && image.batch == 1, ErrorKind::shape,
          "write_png expects a single 3-channel image");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  require(fp != nullptr, ErrorKind::io, "cannot open for writing: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorKind::io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorKind::io, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "libpng error while writing " + path.string());
  }
  png_init_io(png, fp.get());
  // Fixed settings keep encoded bytes reproducible across runs.
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(image.width) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const Eigen::Index px = static_cast<Eigen::Index>(y) * image.width + x;
      row[3 * x + 0] = quantize_u8(image.data(0, px));
      row[3 * x + 1] = quantize_u8(image.data(1, px));
      row[3 * x + 2] = quantize_u8(image.data(2, px));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

FeatureMap<float> read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  require(fp != nullptr, ErrorKind::io, "cannot open for reading: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorKind::io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorKind::io, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::io, "libpng error while reading " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  // Normalize any valid PNG to 8-bit RGB.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  require(png_get_rowbytes(png, info) == static_cast<size_t>(width) * 3,
          ErrorKind::io, "unexpected PNG row layout in " + path.string());

  FeatureMap<float> image = FeatureMap<float>::zeros(3, static_cast<int>(height),
                                                     static_cast<int>(width));
  std::vector<uint8_t> row(static_cast<size_t>(width) * 3);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x) {
      const Eigen::Index px = static_cast<Eigen::Index>(y) * width + x;
      image.data(0, px) = dequantize_u8(row[3 * x + 0]);
      image.data(1, px) = dequantize_u8(row[3 * x + 1]);
      image.data(2, px) = dequantize_u8(row[3 * x + 2]);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace tee
