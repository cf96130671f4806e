#include "holotrack/plot.hpp"

#include "holotrack/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace holotrack {

Color colormap(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  static constexpr std::array<std::array<double, 3>, 4> stops{{{40, 60, 220}, {40, 200, 220}, {240, 220, 40}, {220, 40, 40}}};
  const double s = t * 3.0;
  const int i = std::min(2, static_cast<int>(s));
  const double f = s - i;
  Color c;
  for (int k = 0; k < 3; ++k) {
    c[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(std::lround(
        stops[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * (1 - f) +
        stops[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(k)] * f));
  }
  return c;
}

Canvas::Canvas(int width, int height, Color background) : img_(width, height) {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) pixel(x, y, background);
  }
}

void Canvas::line(double x0, double y0, double x1, double y1, Color c) {
  const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
  const int steps = std::max(1, static_cast<int>(std::ceil(len)));
  if (steps > 100000) return;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    pixel(static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
  }
}

void Canvas::rect(int x0, int y0, int x1, int y1, Color c) {
  line(x0, y0, x1, y0, c);
  line(x1, y0, x1, y1, c);
  line(x1, y1, x0, y1, c);
  line(x0, y1, x0, y0, c);
}

void Canvas::fill_disc(double cx, double cy, double r, Color c) {
  for (int y = static_cast<int>(std::floor(cy - r)); y <= static_cast<int>(std::ceil(cy + r)); ++y) {
    for (int x = static_cast<int>(std::floor(cx - r)); x <= static_cast<int>(std::ceil(cx + r)); ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) pixel(x, y, c);
    }
  }
}

void Canvas::circle(double cx, double cy, double r, Color c) {
  const int n = std::max(16, static_cast<int>(2 * 3.141592653589793 * r));
  for (int i = 0; i < n; ++i) {
    const double a = 2 * 3.141592653589793 * i / n;
    pixel(static_cast<int>(std::lround(cx + r * std::cos(a))), static_cast<int>(std::lround(cy + r * std::sin(a))), c);
  }
}

namespace {

// Rows of 3 bits, most significant bit on the left.
const std::array<std::uint8_t, 5>* glyph(char ch) {
  static const std::array<std::array<std::uint8_t, 5>, 14> font{{
      {7, 5, 5, 5, 7},  // 0
      {2, 6, 2, 2, 7},  // 1
      {7, 1, 7, 4, 7},  // 2
      {7, 1, 7, 1, 7},  // 3
      {5, 5, 7, 1, 1},  // 4
      {7, 4, 7, 1, 7},  // 5
      {7, 4, 7, 5, 7},  // 6
      {7, 1, 1, 1, 1},  // 7
      {7, 5, 7, 5, 7},  // 8
      {7, 5, 7, 1, 7},  // 9
      {0, 0, 0, 0, 2},  // .
      {0, 0, 7, 0, 0},  // -
      {0, 2, 7, 2, 0},  // +
      {0, 7, 7, 4, 7},  // e
  }};
  if (ch >= '0' && ch <= '9') return &font[static_cast<std::size_t>(ch - '0')];
  switch (ch) {
    case '.': return &font[10];
    case '-': return &font[11];
    case '+': return &font[12];
    case 'e': return &font[13];
    default: return nullptr;
  }
}

}  // namespace

void Canvas::text(int x, int y, const std::string& s, Color c, int scale) {
  int cx = x;
  for (char ch : s) {
    if (const auto* g = glyph(ch)) {
      for (int row = 0; row < 5; ++row) {
        for (int col = 0; col < 3; ++col) {
          if (!((*g)[static_cast<std::size_t>(row)] & (4 >> col))) continue;
          for (int dy = 0; dy < scale; ++dy) {
            for (int dx = 0; dx < scale; ++dx) pixel(cx + col * scale + dx, y + row * scale + dy, c);
          }
        }
      }
    }
    cx += 4 * scale;
  }
}

void Canvas::blit(const RgbImage& src, int x, int y) {
  for (int r = 0; r < src.height; ++r) {
    for (int c = 0; c < src.width; ++c) {
      const std::size_t i = (static_cast<std::size_t>(r) * static_cast<std::size_t>(src.width) + static_cast<std::size_t>(c)) * 3;
      img_.set(x + c, y + r, src.pixels[i], src.pixels[i + 1], src.pixels[i + 2]);
    }
  }
}

std::string tick_label(double v, double step) {
  if (std::abs(v) < 1e-12 * std::max(1.0, std::abs(step))) v = 0.0;
  const int digits = step >= 1.0 ? 0 : std::min(6, static_cast<int>(std::ceil(-std::log10(step))));
  return format_fixed(v, digits);
}

namespace {

double nice_step(double range, int target) {
  const double raw = range / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

void plot_series(const std::filesystem::path& path, const std::vector<Series>& series, int width, int height) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) {
    x0 = y0 = 0.0;
    x1 = y1 = 1.0;
  }
  if (x1 - x0 <= 0) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 - y0 <= 0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double padx = 0.05 * (x1 - x0), pady = 0.05 * (y1 - y0);
  x0 -= padx;
  x1 += padx;
  y0 -= pady;
  y1 += pady;

  Canvas cv(width, height);
  const int left = 60, right = width - 15, top = 15, bottom = height - 35;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (right - left); };
  auto py = [&](double y) { return bottom - (y - y0) / (y1 - y0) * (bottom - top); };
  cv.rect(left, top, right, bottom, kBlack);
  const double sx = nice_step(x1 - x0, 6), sy = nice_step(y1 - y0, 6);
  for (double t = std::ceil(x0 / sx) * sx; t <= x1; t += sx) {
    const double p = px(t);
    cv.line(p, bottom, p, bottom + 4, kBlack);
    const std::string lbl = tick_label(t, sx);
    cv.text(static_cast<int>(p) - static_cast<int>(lbl.size()) * 4, bottom + 8, lbl, kBlack, 2);
  }
  for (double t = std::ceil(y0 / sy) * sy; t <= y1; t += sy) {
    const double p = py(t);
    cv.line(left - 4, p, left, p, kBlack);
    const std::string lbl = tick_label(t, sy);
    cv.text(left - 8 - static_cast<int>(lbl.size()) * 8, static_cast<int>(p) - 5, lbl, kBlack, 2);
  }
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (s.connect) {
        if (i > 0 && std::isfinite(s.x[i - 1]) && std::isfinite(s.y[i - 1])) {
          cv.line(px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]), s.color);
        }
      } else {
        const Color c = i < s.value.size() ? colormap(s.value[i]) : s.color;
        cv.fill_disc(px(s.x[i]), py(s.y[i]), 2.5, c);
      }
    }
  }
  cv.save(path);
}

}  // namespace holotrack
