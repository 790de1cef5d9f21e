#include "filagen/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "filagen/error.hpp"

namespace filagen {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_to_exception(png_structp png, png_const_charp message) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = message ? message : "libpng error";
  png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int depth = 8;
  int channels = 1;
  std::vector<std::uint16_t> samples;  // row-major, interleaved channels
};

DecodedPng decode(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DecodeError("cannot open image '" + path.string() + "'");

  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw DecodeError("not a PNG file: '" + path.string() + "'");
  }

  std::string libpng_message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &libpng_message,
                                           png_error_to_exception, png_warning_ignore);
  if (!png) throw DecodeError("libpng init failed for '" + path.string() + "'");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DecodeError("libpng init failed for '" + path.string() + "'");
  }

  DecodedPng out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  std::string unsupported;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("corrupt PNG '" + path.string() + "': " + libpng_message);
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  } else if (depth < 8) {
    unsupported = "unsupported bit depth " + std::to_string(depth);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // native little-endian uint16 rows

  if (!unsupported.empty()) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError(unsupported + " in '" + path.string() + "'");
  }

  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.depth = png_get_bit_depth(png, info);
  out.channels = png_get_channels(png, info);

  const png_size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int r = 0; r < out.height; ++r) {
    rows[static_cast<std::size_t>(r)] = buffer.data() + row_bytes * static_cast<std::size_t>(r);
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height) *
                        static_cast<std::size_t>(out.channels);
  out.samples.resize(n);
  if (out.depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      out.samples[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = buffer[i];
  }
  return out;
}

// Unweighted average over color channels, in native sample units.
std::vector<double> luminance(const DecodedPng& png) {
  const std::size_t pixels = static_cast<std::size_t>(png.width) * static_cast<std::size_t>(png.height);
  std::vector<double> out(pixels);
  const auto channels = static_cast<std::size_t>(png.channels);
  for (std::size_t i = 0; i < pixels; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) sum += png.samples[i * channels + c];
    out[i] = sum / static_cast<double>(channels);
  }
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, int depth,
            const std::vector<png_byte>& buffer) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw RuntimeFailure("cannot write '" + path.string() + "'");

  std::string libpng_message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &libpng_message,
                                            png_error_to_exception, png_warning_ignore);
  if (!png) throw RuntimeFailure("libpng init failed for '" + path.string() + "'");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw RuntimeFailure("libpng init failed for '" + path.string() + "'");
  }

  const std::size_t row_bytes = static_cast<std::size_t>(width) * (depth == 16 ? 2 : 1);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r) {
    rows[static_cast<std::size_t>(r)] =
        const_cast<png_bytep>(buffer.data()) + row_bytes * static_cast<std::size_t>(r);
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw RuntimeFailure("PNG encode failed for '" + path.string() + "': " + libpng_message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);

  if (std::fflush(file.get()) != 0) {
    throw RuntimeFailure("write failed for '" + path.string() + "'");
  }
}

}  // namespace

GrayImage load_image(const std::filesystem::path& path, BitDepthPolicy policy) {
  DecodedPng png = decode(path);
  if ((policy == BitDepthPolicy::kRequire8 && png.depth != 8) ||
      (policy == BitDepthPolicy::kRequire16 && png.depth != 16)) {
    throw DecodeError("unsupported bit depth " + std::to_string(png.depth) + " in '" +
                      path.string() + "'");
  }
  const double full_scale = png.depth == 16 ? 65535.0 : 255.0;
  std::vector<double> data = luminance(png);
  for (double& v : data) v /= full_scale;
  return GrayImage(png.width, png.height, std::move(data));
}

BinaryMask load_mask(const std::filesystem::path& path) {
  DecodedPng png = decode(path);
  const double cutoff = png.depth == 16 ? 128.0 * 257.0 : 128.0;
  std::vector<double> values = luminance(png);
  std::vector<std::uint8_t> data(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) data[i] = values[i] >= cutoff ? 1 : 0;
  return BinaryMask(png.width, png.height, std::move(data));
}

RasterSize png_size(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DecodeError("cannot open image '" + path.string() + "'");
  // Signature (8) + IHDR length/type (8) + width (4) + height (4).
  unsigned char header[24];
  if (std::fread(header, 1, sizeof header, file.get()) != sizeof header ||
      png_sig_cmp(header, 0, 8) != 0) {
    throw DecodeError("not a PNG file: '" + path.string() + "'");
  }
  auto be32 = [](const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
  };
  return RasterSize{static_cast<int>(be32(header + 16)), static_cast<int>(be32(header + 20))};
}

void save_image(const std::filesystem::path& path, const GrayImage& image) {
  std::vector<png_byte> buffer(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    buffer[i] = static_cast<png_byte>(std::lround(image.data()[i] * 255.0));
  }
  encode(path, image.width(), image.height(), 8, buffer);
}

void save_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<png_byte> buffer(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) buffer[i] = mask.data()[i] ? 255 : 0;
  encode(path, mask.width(), mask.height(), 8, buffer);
}

void save_image16(const std::filesystem::path& path, const GrayImage& image) {
  std::vector<png_byte> buffer(image.size() * 2);
  for (std::size_t i = 0; i < image.size(); ++i) {
    auto v = static_cast<std::uint16_t>(std::lround(image.data()[i] * 65535.0));
    std::memcpy(buffer.data() + 2 * i, &v, 2);
  }
  encode(path, image.width(), image.height(), 16, buffer);
}

}  // namespace filagen
