#include "holotrack/refine.hpp"

#include "holotrack/errors.hpp"

#include <cmath>
#include <vector>

namespace holotrack {

void ProfileParams::validate() const {
  if (!(delta_r > 0) || delta_r > 1.0) throw ConfigError("delta_r must be in (0, 1]");
  if (!(delta_theta > 0) || delta_theta > 2.0 * std::numbers::pi / 8.0 + 1e-12) {
    throw ConfigError("delta_theta must be in (0, 2pi/8]");
  }
}

namespace {

std::vector<double> sample_angles(SamplingMode mode, double delta_theta, std::optional<double> heading) {
  std::vector<double> angles;
  if (mode == SamplingMode::Circular) {
    const int n = std::max(1, static_cast<int>(std::lround(2.0 * std::numbers::pi / delta_theta)));
    for (int j = 0; j < n; ++j) angles.push_back(2.0 * std::numbers::pi * j / n);
    return angles;
  }
  if (!heading) throw ConfigError("sector sampling needs a heading");
  const int n = static_cast<int>(std::floor(2.0 * kSectorHalfWidth / delta_theta + 1e-9)) + 1;
  for (double side : {0.5 * std::numbers::pi, -0.5 * std::numbers::pi}) {
    const double mid = *heading + side;
    for (int j = 0; j < n; ++j) angles.push_back(mid + (j - 0.5 * (n - 1)) * delta_theta);
  }
  return angles;
}

}  // namespace

RadialProfile radial_profile(const Image& pixels, const Vec2& center, SamplingMode mode, double delta_r,
                             double delta_theta, std::optional<double> heading) {
  ProfileParams{mode, delta_r, delta_theta}.validate();
  const double w = static_cast<double>(pixels.cols()), h = static_cast<double>(pixels.rows());
  const double cx = center.x(), cy = center.y();
  if (!(cx >= 0 && cy >= 0 && cx <= w - 1 && cy <= h - 1)) throw DataError("profile center outside template");
  const double inscribed = std::min({cx, cy, w - 1 - cx, h - 1 - cy});
  const auto k = static_cast<Eigen::Index>(std::floor(inscribed / delta_r));
  if (k < 1) throw DataError("profile center too close to the template edge");

  const std::vector<double> angles = sample_angles(mode, delta_theta, heading);
  std::vector<double> cs, sn;
  for (double a : angles) {
    cs.push_back(std::cos(a));
    sn.push_back(std::sin(a));
  }
  Eigen::ArrayXd half(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double r = static_cast<double>(i) * delta_r;
    double acc = 0.0;
    for (std::size_t j = 0; j < angles.size(); ++j) acc += bilinear(pixels, cx + r * cs[j], cy + r * sn[j]);
    half[i] = acc / static_cast<double>(angles.size());
  }

  RadialProfile p;
  p.values.resize(2 * k);
  p.values.head(k) = half.reverse();
  p.values.tail(k) = half;
  p.delta_r = delta_r;
  p.origin_center = center;
  p.mode = mode;
  p.heading = heading;
  return p;
}

RadialProfile radial_profile(const Template& t, const Vec2& center, SamplingMode mode, double delta_r,
                             double delta_theta, std::optional<double> heading) {
  RadialProfile p = radial_profile(t.pixels, center - t.origin(), mode, delta_r, delta_theta, heading);
  p.origin_center = center;
  return p;
}

double mirror_offset(const Eigen::ArrayXd& line) {
  const Eigen::Index n = line.size();
  if (n < 3) return 0.0;
  const Eigen::ArrayXd s = line - line.mean();
  if (s.square().sum() < 1e-20) return 0.0;
  const Eigen::ArrayXd rev = s.reverse();
  // corr(tau) = sum_i s[i] rev[i - tau] peaks at twice the offset.
  const Eigen::Index max_lag = std::max<Eigen::Index>(1, n / 2);
  auto corr = [&](Eigen::Index tau) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, tau), hi = std::min(n, n + tau);
    return (s.segment(lo, hi - lo) * rev.segment(lo - tau, hi - lo)).sum();
  };
  Eigen::Index best = 0;
  double best_v = corr(0);
  for (Eigen::Index tau = 1; tau <= max_lag; ++tau) {
    for (Eigen::Index t : {-tau, tau}) {
      const double v = corr(t);
      if (v > best_v) {
        best_v = v;
        best = t;
      }
    }
  }
  double frac = 0.0;
  if (best > -max_lag && best < max_lag) {
    const double l = corr(best - 1), r = corr(best + 1);
    const double denom = l - 2.0 * best_v + r;
    if (denom < 0) frac = 0.5 * (l - r) / denom;
  }
  return 0.5 * (static_cast<double>(best) + frac);
}

namespace {

constexpr int kBand = 2;  // half-thickness of the averaged line
constexpr int kMaxIterations = 5;
constexpr double kTolerance = 0.01;

Eigen::ArrayXd band_line(const Image& px, double cx, double cy, bool along_x) {
  const double w = static_cast<double>(px.cols()), h = static_cast<double>(px.rows());
  const double c = along_x ? cx : cy;
  const double extent = along_x ? w : h;
  const auto half = static_cast<Eigen::Index>(std::floor(std::min(c, extent - 1 - c)));
  if (half < 2) return {};
  Eigen::ArrayXd line = Eigen::ArrayXd::Zero(2 * half + 1);
  for (Eigen::Index k = -half; k <= half; ++k) {
    double acc = 0.0;
    for (int b = -kBand; b <= kBand; ++b) {
      acc += along_x ? bilinear(px, cx + static_cast<double>(k), cy + b) : bilinear(px, cx + b, cy + static_cast<double>(k));
    }
    line[k + half] = acc / (2 * kBand + 1);
  }
  return line;
}

}  // namespace

XcorrResult xcorr_refine(const Template& t, const Vec2& initial) {
  const Vec2 origin = t.origin();
  Vec2 c = initial - origin;
  const double w = static_cast<double>(t.pixels.cols()), h = static_cast<double>(t.pixels.rows());
  XcorrResult out;
  for (int it = 1; it <= kMaxIterations; ++it) {
    out.iterations = it;
    const Eigen::ArrayXd lx = band_line(t.pixels, c.x(), c.y(), true);
    const double dx = lx.size() ? mirror_offset(lx) : 0.0;
    c.x() = std::clamp(c.x() + dx, 0.0, w - 1);
    const Eigen::ArrayXd ly = band_line(t.pixels, c.x(), c.y(), false);
    const double dy = ly.size() ? mirror_offset(ly) : 0.0;
    c.y() = std::clamp(c.y() + dy, 0.0, h - 1);
    if (std::max(std::abs(dx), std::abs(dy)) < kTolerance) {
      out.converged = true;
      break;
    }
  }
  out.center = c + origin;
  return out;
}

}  // namespace holotrack
