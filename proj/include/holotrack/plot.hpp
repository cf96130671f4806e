#pragma once

#include "holotrack/image.hpp"
#include "holotrack/image_io.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace holotrack {

using Color = std::array<std::uint8_t, 3>;

inline constexpr Color kBlack{0, 0, 0};
inline constexpr Color kWhite{255, 255, 255};
inline constexpr Color kRed{220, 40, 40};
inline constexpr Color kGreen{40, 200, 60};
inline constexpr Color kBlue{40, 80, 220};
inline constexpr Color kGrey{170, 170, 170};

/// Blue -> cyan -> yellow -> red for t in [0, 1].
Color colormap(double t);

class Canvas {
 public:
  Canvas(int width, int height, Color background = kWhite);
  explicit Canvas(RgbImage img) : img_(std::move(img)) {}

  int width() const { return img_.width; }
  int height() const { return img_.height; }
  const RgbImage& image() const { return img_; }

  void pixel(int x, int y, Color c) { img_.set(x, y, c[0], c[1], c[2]); }
  void line(double x0, double y0, double x1, double y1, Color c);
  void rect(int x0, int y0, int x1, int y1, Color c);
  void fill_disc(double cx, double cy, double r, Color c);
  void circle(double cx, double cy, double r, Color c);
  /// 3x5 glyphs scaled by `scale`; digits, '.', '-', '+' and 'e'.
  void text(int x, int y, const std::string& s, Color c, int scale = 1);
  /// Copies another image with its top-left corner at (x, y).
  void blit(const RgbImage& src, int x, int y);

  void save(const std::filesystem::path& path) const { write_png(path, img_); }

 private:
  RgbImage img_;
};

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  Color color = kBlue;
  bool connect = false;       // polyline instead of markers
  std::vector<double> value;  // optional per-point colour value in [0, 1]
};

/// Axes with numeric tick labels, autoscaled to the data.
void plot_series(const std::filesystem::path& path, const std::vector<Series>& series, int width = 640,
                 int height = 480);

/// Tick label text with a sensible number of digits.
std::string tick_label(double v, double step);

}  // namespace holotrack
