#include "hoidet/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <png.h>

#include "hoidet/errors.hpp"

namespace hoidet {

Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.rgb.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

namespace {

std::vector<std::uint8_t> encode(int width, int height, const std::uint8_t* data,
                                 png_uint_32 format) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, data, 0, nullptr)) {
    throw IoError(std::string("PNG size query failed: ") + img.message);
  }
  std::vector<std::uint8_t> buf(size);
  if (!png_image_write_to_memory(&img, buf.data(), &size, 0, data, 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + img.message);
  }
  buf.resize(size);
  return buf;
}

void write_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw IoError("cannot write " + path.string());
  const auto n = std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (n != bytes.size()) throw IoError("short write to " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
  return encode(image.width, image.height, image.rgb.data(), PNG_FORMAT_RGB);
}

void write_png(const Image& image, const std::filesystem::path& path) {
  write_bytes(encode_png(image), path);
}

void write_gray_png(int width, int height, std::span<const std::uint8_t> gray,
                    const std::filesystem::path& path) {
  if (gray.size() != static_cast<std::size_t>(width) * height) {
    throw PreconditionError("write_gray_png: buffer size mismatch");
  }
  write_bytes(encode(width, height, gray.data(), PNG_FORMAT_GRAY), path);
}

void crop_resize(const Image& image, const BBox& box, int size, std::span<float> out_chw) {
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  if (out_chw.size() != 3 * plane) throw PreconditionError("crop_resize: output size mismatch");
  const double sx = box.width() / size;
  const double sy = box.height() / size;
  for (int v = 0; v < size; ++v) {
    const double fy = std::clamp(box.y1 + (v + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int u = 0; u < size; ++u) {
      const double fx = std::clamp(box.x1 + (u + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      const auto* p00 = image.pixel(x0, y0);
      const auto* p01 = image.pixel(x1, y0);
      const auto* p10 = image.pixel(x0, y1);
      const auto* p11 = image.pixel(x1, y1);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + wx * (p01[c] - p00[c]);
        const double bot = p10[c] + wx * (p11[c] - p10[c]);
        const double val = top + wy * (bot - top);
        out_chw[c * plane + static_cast<std::size_t>(v) * size + u] =
            static_cast<float>(val / 255.0 - 0.5);
      }
    }
  }
}

}  // namespace hoidet
