#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hoidet/geometry.hpp"

namespace hoidet {

/// 8-bit RGB raster, row-major, interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  [[nodiscard]] bool empty() const { return width == 0 || height == 0; }
  [[nodiscard]] std::uint8_t* pixel(int x, int y) {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  [[nodiscard]] const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

[[nodiscard]] Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);
[[nodiscard]] std::vector<std::uint8_t> encode_png(const Image& image);

/// 8-bit single-channel PNG, used for Interaction Pattern grids.
void write_gray_png(int width, int height, std::span<const std::uint8_t> gray,
                    const std::filesystem::path& path);

/// Bilinear crop of `box` resized to size x size, planar CHW floats in
/// [-0.5, 0.5]. Output sample (u, v) reads the image at the box-relative
/// position of its cell center; pixel centers sit at half-integers.
void crop_resize(const Image& image, const BBox& box, int size, std::span<float> out_chw);

}  // namespace hoidet
