#pragma once

#include "holotrack/image.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace holotrack {

struct ImageInfo {
  Eigen::Index width = 0;
  Eigen::Index height = 0;
};

/// True for extensions the reader understands (.pgm .ppm .png .tif .tiff).
bool is_supported_image(const std::filesystem::path& path);

/// Reads only the header.
ImageInfo probe_image(const std::filesystem::path& path);

/// Reads a raster image as luminance scaled to [0, 1] by the sample bit depth.
/// Colour input is converted with Rec. 601 luma weights.
Image read_image(const std::filesystem::path& path);

/// Writes a 16-bit binary PGM; values are clipped to [0, 1].
void write_pgm16(const std::filesystem::path& path, const Image& img);

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
};

void write_png(const std::filesystem::path& path, const RgbImage& img);

/// Grey image in [0, 1] to RGB (clipped).
RgbImage to_rgb(const Image& img);

}  // namespace holotrack
