#include "test_support.hpp"

#include <png.h>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace filagen::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_png(const fs::path& path, int width, int height, int bit_depth, int color_type,
               const std::vector<std::uint16_t>& samples) {
  std::FILE* file = std::fopen(path.c_str(), "wb");
  if (!file) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(file);
    throw std::runtime_error("png write failed");
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  int channels = 1;
  if (color_type == PNG_COLOR_TYPE_RGB) channels = 3;
  if (color_type == PNG_COLOR_TYPE_RGBA) channels = 4;
  if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) channels = 2;
  const int per_row = width * channels;

  std::vector<png_byte> row;
  for (int r = 0; r < height; ++r) {
    row.assign(static_cast<std::size_t>((per_row * bit_depth + 7) / 8), 0);
    for (int i = 0; i < per_row; ++i) {
      const std::uint16_t v = samples[static_cast<std::size_t>(r * per_row + i)];
      if (bit_depth == 16) {
        row[static_cast<std::size_t>(2 * i)] = static_cast<png_byte>(v >> 8);
        row[static_cast<std::size_t>(2 * i + 1)] = static_cast<png_byte>(v & 0xff);
      } else if (bit_depth == 8) {
        row[static_cast<std::size_t>(i)] = static_cast<png_byte>(v);
      } else {
        const int bit = i * bit_depth;
        const int shift = 8 - bit_depth - (bit % 8);
        row[static_cast<std::size_t>(bit / 8)] |= static_cast<png_byte>(v << shift);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(file);
}

BinaryMask random_mask(Rng& rng, int width, int height, double density) {
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (auto& v : data) v = rng.uniform01() < density ? 1 : 0;
  return BinaryMask(width, height, std::move(data));
}

GrayImage random_image(Rng& rng, int width, int height) {
  std::vector<double> data(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (auto& v : data) v = rng.uniform01();
  return GrayImage(width, height, std::move(data));
}

BinaryMask bar_mask(int width, int height, int top, int left, int thickness, int length) {
  BinaryMask m(width, height);
  for (int r = top; r < top + thickness; ++r) {
    for (int c = left; c < left + length; ++c) m.set(r, c, true);
  }
  return m;
}

}  // namespace filagen::testing
