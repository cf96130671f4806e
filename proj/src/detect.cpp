#include "holotrack/detect.hpp"

#include "holotrack/errors.hpp"
#include "holotrack/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace holotrack {

void DetectParams::validate() const {
  if (num_scales < 1 || num_scales > 4) throw ConfigError("number_of_scales must be in [1, 4]");
  if (its_threshold < 0.01 || its_threshold > 0.3) throw ConfigError("its_transform_threshold must be in [0.01, 0.3]");
  if (min_segment_length < 3 || min_segment_length > 100) throw ConfigError("segment_length must be in [3, 100]");
  if (min_votes < 5 || min_votes > 50) throw ConfigError("minimum_votes must be in [5, 50]");
  if (iterations_multiple < 1 || iterations_multiple > 10) throw ConfigError("multiple_of_iterations must be in [1, 10]");
  if (mapping_kernel_radius < 1 || mapping_kernel_radius > 10) throw ConfigError("mapping_kernel_size must be in [1, 10]");
  if (canny_multiple < 0 || canny_multiple > 10) throw ConfigError("canny_edge_multiple must be in [0, 10]");
  if (!(canny_sigma >= 0.0)) throw ConfigError("canny_sigma must be >= 0");
}

std::size_t EdgeMap::count() const { return static_cast<std::size_t>(binary.count()); }

// ---------------------------------------------------------------------------
// Otsu

OtsuResult otsu_threshold(const Image& img) {
  std::array<std::int64_t, 256> hist{};
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const double v = img.data()[i];
    int b = static_cast<int>(std::floor(v * 256.0));
    hist[static_cast<std::size_t>(std::clamp(b, 0, 255))]++;
  }
  const std::int64_t total = static_cast<std::int64_t>(img.size());
  std::int64_t total_sum = 0;
  for (int k = 0; k < 256; ++k) total_sum += k * hist[static_cast<std::size_t>(k)];

  // Between-class variance (up to a positive constant) is
  // (n0 * S1 - n1 * S0)^2 / (n0 * n1); comparisons are done exactly in
  // 128-bit integers so ties resolve deterministically to the lowest bin.
  using i128 = __int128;
  i128 best_num = 0;
  i128 best_den = 1;
  int best = 0;
  std::int64_t n0 = 0, s0 = 0;
  for (int k = 0; k < 256; ++k) {
    n0 += hist[static_cast<std::size_t>(k)];
    s0 += k * hist[static_cast<std::size_t>(k)];
    const std::int64_t n1 = total - n0;
    const std::int64_t s1 = total_sum - s0;
    if (n0 == 0 || n1 == 0) continue;
    const i128 d = static_cast<i128>(n0) * s1 - static_cast<i128>(n1) * s0;
    const i128 num = d * d;
    const i128 den = static_cast<i128>(n0) * n1;
    if (num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best = k;
    }
  }
  OtsuResult r;
  r.bin = best;
  r.threshold = (best + 1) / 256.0;
  r.degenerate = best_num == 0;
  return r;
}

// ---------------------------------------------------------------------------
// Canny

namespace {

void sobel(const Image& s, Image& gx, Image& gy) {
  const Eigen::Index h = s.rows();
  const Eigen::Index w = s.cols();
  gx.setZero(h, w);
  gy.setZero(h, w);
  if (h < 3 || w < 3) return;
  for (Eigen::Index y = 1; y + 1 < h; ++y) {
    const double* up = &s(y - 1, 0);
    const double* mid = &s(y, 0);
    const double* dn = &s(y + 1, 0);
    double* ox = &gx(y, 0);
    double* oy = &gy(y, 0);
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      ox[x] = (up[x + 1] + 2.0 * mid[x + 1] + dn[x + 1]) - (up[x - 1] + 2.0 * mid[x - 1] + dn[x - 1]);
      oy[x] = (dn[x - 1] + 2.0 * dn[x] + dn[x + 1]) - (up[x - 1] + 2.0 * up[x] + up[x + 1]);
    }
  }
}

}  // namespace

EdgeMap canny_edges(const Image& img, double high, double low, double sigma) {
  if (high < low) throw ConfigError("canny high threshold below low threshold");
  EdgeMap e;
  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();
  e.binary = Mask::Constant(h, w, false);
  Image smooth = img;
  if (sigma > 0.0) {
    const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    smooth = convolve_separable(img, gaussian_kernel_1d(2 * half + 1, sigma));
  }
  sobel(smooth, e.grad_x, e.grad_y);
  Image mag = (e.grad_x.square() + e.grad_y.square()).sqrt();
  const double max_mag = mag.maxCoeff();
  if (!(max_mag > 0.0)) return e;
  mag /= max_mag;

  // Non-maximum suppression along the quantised gradient direction. One side
  // is compared strictly so a symmetric two-pixel ridge keeps a single pixel.
  Mask candidate = Mask::Constant(h, w, false);
  constexpr double kTan22 = 0.41421356237309503;
  for (Eigen::Index y = 1; y + 1 < h; ++y) {
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      const double m = mag(y, x);
      if (!(m > 0.0) || m < low) continue;
      const double ax = std::abs(e.grad_x(y, x));
      const double ay = std::abs(e.grad_y(y, x));
      double before, after;
      if (ay <= kTan22 * ax) {
        before = mag(y, x - 1);
        after = mag(y, x + 1);
      } else if (ax <= kTan22 * ay) {
        before = mag(y - 1, x);
        after = mag(y + 1, x);
      } else if ((e.grad_x(y, x) > 0) == (e.grad_y(y, x) > 0)) {
        before = mag(y - 1, x - 1);
        after = mag(y + 1, x + 1);
      } else {
        before = mag(y - 1, x + 1);
        after = mag(y + 1, x - 1);
      }
      if (m > before && m >= after) candidate(y, x) = true;
    }
  }

  // Hysteresis: grow from strong pixels through 8-connected candidates.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack;
  for (Eigen::Index y = 1; y + 1 < h; ++y) {
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      if (!candidate(y, x) || e.binary(y, x) || mag(y, x) < high) continue;
      e.binary(y, x) = true;
      stack.emplace_back(y, x);
      while (!stack.empty()) {
        const auto [cy, cx] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const Eigen::Index ny = cy + dy, nx = cx + dx;
            if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
            if (candidate(ny, nx) && !e.binary(ny, nx)) {
              e.binary(ny, nx) = true;
              stack.emplace_back(ny, nx);
            }
          }
        }
      }
    }
  }
  return e;
}

EdgeMap canny_edges_auto(const Image& img, double canny_multiple, double sigma) {
  const double high = canny_multiple * otsu_threshold(img).threshold;
  return canny_edges(img, high, high / 3.0, sigma);
}

// ---------------------------------------------------------------------------
// Segment linking

std::vector<Segment> link_segments(const EdgeMap& edges, int min_len) {
  const Eigen::Index h = edges.height();
  const Eigen::Index w = edges.width();
  Mask visited = Mask::Constant(h, w, false);
  std::vector<Segment> out;
  std::vector<PixelPoint> stack;
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      if (!edges.binary(y, x) || visited(y, x)) continue;
      // Depth-first trace: consecutive points are 8-neighbours wherever the
      // chain does not branch.
      Segment seg;
      stack.clear();
      stack.push_back({static_cast<int>(x), static_cast<int>(y)});
      visited(y, x) = true;
      while (!stack.empty()) {
        const PixelPoint p = stack.back();
        stack.pop_back();
        seg.points.push_back(p);
        for (int dy = 1; dy >= -1; --dy) {
          for (int dx = 1; dx >= -1; --dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (edges.binary(ny, nx) && !visited(ny, nx)) {
              visited(ny, nx) = true;
              stack.push_back({nx, ny});
            }
          }
        }
      }
      if (static_cast<int>(seg.length()) >= min_len) out.push_back(std::move(seg));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ITs voting

Image vote_kernel(int radius) {
  const int size = 2 * radius + 1;
  const std::vector<double> k = gaussian_kernel_1d(size, radius / 2.0);
  Image out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out(y, x) = k[static_cast<std::size_t>(y)] * k[static_cast<std::size_t>(x)];
  return out;
}

VoteMap its_transform(const std::vector<Segment>& segments, const EdgeMap& edges, const DetectParams& params,
                      std::uint64_t seed) {
  VoteMap vm;
  const Eigen::Index h = edges.height();
  const Eigen::Index w = edges.width();
  vm.votes = Image::Zero(h, w);
  std::size_t total = 0;
  for (const Segment& s : segments) total += s.length();
  if (segments.empty() || total == 0) return vm;

  const int r = params.mapping_kernel_radius;
  const Image kernel = vote_kernel(r);
  const auto iterations = static_cast<std::uint64_t>(std::llround(params.iterations_multiple * static_cast<double>(total)));
  SplitMix64 rng(seed);
  const double thr = params.its_threshold;

  // Unit gradients per segment point, laid out contiguously.
  struct Oriented {
    double x, y, gx, gy;
    bool valid;
  };
  std::vector<std::vector<Oriented>> pts(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (const PixelPoint& p : segments[i].points) {
      const double gx = edges.grad_x(p.y, p.x), gy = edges.grad_y(p.y, p.x);
      const double n = std::hypot(gx, gy);
      pts[i].push_back(n > 0.0 ? Oriented{double(p.x), double(p.y), gx / n, gy / n, true}
                               : Oriented{double(p.x), double(p.y), 0.0, 0.0, false});
    }
  }

  for (std::uint64_t it = 0; it < iterations; ++it) {
    // Exactly three draws per iteration so acceptance never shifts the stream.
    const std::vector<Oriented>& seg = pts[rng.below(pts.size())];
    const std::uint64_t n = seg.size();
    if (n < 2) {
      rng.next();
      rng.next();
      continue;
    }
    const std::uint64_t ia = rng.below(n);
    std::uint64_t ib = rng.below(n - 1);
    if (ib >= ia) ++ib;
    const Oriented& a = seg[ia];
    const Oriented& b = seg[ib];
    if (!a.valid || !b.valid) continue;
    // a + t*ga = b + s*gb
    const double det = b.gx * a.gy - a.gx * b.gy;
    if (std::abs(det) < 1e-6) continue;
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double t = (b.gx * dy - b.gy * dx) / det;
    const double s = (a.gx * dy - a.gy * dx) / det;
    if (!(t * s > 0.0)) continue;
    const double ta = std::abs(t), sb = std::abs(s);
    if (std::abs(ta - sb) > thr * std::max(ta, sb)) continue;
    const double cx = a.x + t * a.gx;
    const double cy = a.y + t * a.gy;
    if (!(cx > -0.5 - r) || !(cy > -0.5 - r) || !(cx < w - 0.5 + r) || !(cy < h - 0.5 + r)) continue;
    const auto px = static_cast<Eigen::Index>(std::lround(cx));
    const auto py = static_cast<Eigen::Index>(std::lround(cy));
    const Eigen::Index x0 = std::max<Eigen::Index>(0, px - r), x1 = std::min<Eigen::Index>(w - 1, px + r);
    const Eigen::Index y0 = std::max<Eigen::Index>(0, py - r), y1 = std::min<Eigen::Index>(h - 1, py + r);
    for (Eigen::Index yy = y0; yy <= y1; ++yy) {
      double* dst = &vm.votes(yy, 0);
      const double* src = &kernel(yy - (py - r), 0) - (px - r);
      for (Eigen::Index xx = x0; xx <= x1; ++xx) dst[xx] += src[xx];
    }
  }
  return vm;
}

// ---------------------------------------------------------------------------
// Peaks and multi-scale fusion

std::vector<Detection> extract_peaks(const Image& fused, double min_votes, double merge_radius, int frame_index) {
  const Eigen::Index h = fused.rows();
  const Eigen::Index w = fused.cols();
  struct Peak {
    Eigen::Index x, y;
    double v;
  };
  std::vector<Peak> peaks;
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const double v = fused(y, x);
      if (v < min_votes) continue;
      bool is_max = true;
      // Plateaus: strictly greater than raster-earlier neighbours, >= later ones.
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const Eigen::Index ny = y + dy, nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
          const double n = fused(ny, nx);
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (earlier ? n >= v : n > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({x, y, v});
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.v != b.v) return a.v > b.v;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  std::vector<Detection> out;
  for (const Peak& p : peaks) {
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const Eigen::Index ny = p.y + dy, nx = p.x + dx;
        if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
        const double v = std::max(0.0, fused(ny, nx));
        sw += v;
        sx += v * static_cast<double>(nx);
        sy += v * static_cast<double>(ny);
      }
    }
    Detection d;
    d.x = sw > 0 ? sx / sw : static_cast<double>(p.x);
    d.y = sw > 0 ? sy / sw : static_cast<double>(p.y);
    d.score = p.v;
    d.frame_index = frame_index;
    const bool merged = std::any_of(out.begin(), out.end(), [&](const Detection& o) {
      return std::hypot(o.x - d.x, o.y - d.y) <= merge_radius;
    });
    if (!merged) out.push_back(d);
  }
  return out;
}

DetectionReport detect_particles_report(const Frame& frame, const DetectParams& params) {
  params.validate();
  DetectionReport rep;
  const Eigen::Index w = frame.width();
  const Eigen::Index h = frame.height();
  rep.fused = Image::Zero(h, w);
  Image level_image = frame.intensities;
  for (int k = 0; k < params.num_scales; ++k) {
    if (k > 0) {
      if (level_image.rows() < 8 || level_image.cols() < 8) break;
      level_image = downsample_half(level_image);
    }
    DetectionLevel lvl;
    lvl.image = level_image;
    lvl.edges = canny_edges_auto(lvl.image, params.canny_multiple, params.canny_sigma);
    lvl.segments = link_segments(lvl.edges, params.min_segment_length);
    lvl.votes = its_transform(lvl.segments, lvl.edges, params, derive_seed(params.seed, static_cast<std::uint64_t>(k)));
    rep.fused += upsample_to(lvl.votes.votes, k, w, h);
    rep.levels.push_back(std::move(lvl));
  }
  const double mx = rep.fused.maxCoeff();
  rep.normalized = mx > 0.0 ? Image(rep.fused / mx) : Image(Image::Zero(h, w));
  rep.detections = extract_peaks(rep.fused, params.min_votes, params.mapping_kernel_radius, frame.index);
  return rep;
}

std::vector<Detection> detect_particles(const Frame& frame, const DetectParams& params) {
  return detect_particles_report(frame, params).detections;
}

}  // namespace holotrack
