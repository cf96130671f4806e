#include "holotrack/holo.hpp"

#include "holotrack/errors.hpp"

#include <algorithm>
#include <cmath>

namespace holotrack {

void OpticalConfig::validate() const {
  if (!(wavelength_vacuum > 0)) throw ConfigError("wavelength must be > 0");
  if (!(refractive_index > 0)) throw ConfigError("refractive_index must be > 0");
  if (!(pixel_size > 0)) throw ConfigError("conversion_factor must be > 0");
}

void ZScan::validate() const {
  if (!(z_step > 0)) throw ConfigError("step_size must be > 0");
  if (!(z_end > z_start)) throw ConfigError("last_step must exceed initial_step");
  if ((z_end - z_start) / z_step > 1e6) throw ConfigError("z scan has too many steps");
}

std::vector<double> ZScan::values() const {
  validate();
  const auto n = static_cast<std::size_t>(std::floor((z_end - z_start) / z_step + 1e-9)) + 1;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = z_start + static_cast<double>(i) * z_step;
  return z;
}

Eigen::ArrayXd axial_wavenumbers_1d(int n, double extent_um, double lambda_um) {
  Eigen::ArrayXd kz(n);
  const double k = 2.0 * std::numbers::pi / lambda_um;
  for (int i = 0; i < n; ++i) {
    const double f = lambda_um * frequency_index(i, n) / extent_um;
    const double rad = 1.0 - f * f;
    kz[i] = rad < 0 ? -1.0 : k * std::sqrt(rad);
  }
  return kz;
}

namespace {

// kz over an n x n grid; negative marks evanescent bins.
Eigen::ArrayXXd axial_wavenumbers_2d(int n, double extent_um, double lambda_um) {
  Eigen::ArrayXXd kz(n, n);
  const double k = 2.0 * std::numbers::pi / lambda_um;
  for (int r = 0; r < n; ++r) {
    const double q = lambda_um * frequency_index(r, n) / extent_um;
    for (int c = 0; c < n; ++c) {
      const double p = lambda_um * frequency_index(c, n) / extent_um;
      const double rad = 1.0 - p * p - q * q;
      kz(r, c) = rad < 0 ? -1.0 : k * std::sqrt(rad);
    }
  }
  return kz;
}

std::complex<double> phase_factor(double kz, double z) {
  return kz < 0 ? std::complex<double>(0.0) : std::polar(1.0, -z * kz);
}

}  // namespace

ComplexImage transfer_function_2d(int n, double z_um, const OpticalConfig& optics) {
  const Eigen::ArrayXXd kz = axial_wavenumbers_2d(n, n * optics.pixel_size * 1e-3, optics.effective_wavelength() * 1e-3);
  ComplexImage h(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) h(r, c) = phase_factor(kz(r, c), z_um);
  }
  return h;
}

Eigen::ArrayXcd propagate_1d(const RadialProfile& profile, double z_um, const OpticalConfig& optics) {
  return propagate_line<double>(profile.values.cast<std::complex<double>>(), profile.delta_r, z_um, optics);
}

namespace {

Eigen::Index outer_count(Eigen::Index m) {
  return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(0.1 * static_cast<double>(m))));
}

}  // namespace

double profile_background(const Eigen::ArrayXd& values) {
  const Eigen::Index m = values.size();
  if (m == 0) return 0.0;
  const Eigen::Index k = std::min(outer_count(m), (m + 1) / 2);
  return 0.5 * (values.head(k).mean() + values.tail(k).mean());
}

RadialProfile extend_profile(const RadialProfile& profile, double margin_factor) {
  if (!(margin_factor >= 1.0)) throw ConfigError("template margin factor must be >= 1");
  const Eigen::Index m = profile.size();
  Eigen::Index len = static_cast<Eigen::Index>(std::lround(margin_factor * static_cast<double>(m)));
  len += len % 2;
  if (len <= m) return profile;
  RadialProfile out = profile;
  const Eigen::Index pad = (len - m) / 2;
  out.values = Eigen::ArrayXd::Constant(len, profile_background(profile.values));
  out.values.segment(pad, m) = profile.values;
  return out;
}

int mask_half_width(double mask_radius_px, double delta_r) {
  return std::max(1, static_cast<int>(std::lround(mask_radius_px / delta_r)));
}

std::size_t argmax_first(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

namespace {

std::vector<double> scan_curve(const Eigen::ArrayXd& values, double delta_r, const std::vector<double>& zs,
                               const OpticalConfig& optics, double mask_radius_px) {
  const int n = static_cast<int>(values.size());
  if (n < 2 || n % 2 != 0) throw DataError("axial scan needs an even-length profile");
  const double lambda = optics.effective_wavelength() * 1e-3;
  const Eigen::ArrayXd kz = axial_wavenumbers_1d(n, n * delta_r * optics.pixel_size * 1e-3, lambda);
  const double bg = profile_background(values);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> src(static_cast<std::size_t>(n)), spec, buf(static_cast<std::size_t>(n)), out;
  for (int i = 0; i < n; ++i) src[static_cast<std::size_t>(i)] = values[i] - bg;
  fft.fwd(spec, src);
  const int half = std::min(mask_half_width(mask_radius_px, delta_r), n / 2);
  const int lo = n / 2 - half, hi = n / 2 + half;
  std::vector<double> curve;
  curve.reserve(zs.size());
  for (double z : zs) {
    for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = spec[static_cast<std::size_t>(i)] * phase_factor(kz[i], z);
    fft.inv(out, buf);
    double acc = 0.0;
    for (int i = lo; i < hi; ++i) acc += std::norm(out[static_cast<std::size_t>(i)]);
    curve.push_back(acc / (hi - lo));
  }
  return curve;
}

AxialReconstruction finish(std::vector<double> zs, std::vector<double> curve) {
  AxialReconstruction r;
  const std::size_t k = argmax_first(curve);
  r.z_star = zs[k];
  r.curve_complete = k > 0 && k + 1 < curve.size();
  r.z_values = std::move(zs);
  r.intensities = std::move(curve);
  return r;
}

}  // namespace

AxialReconstruction axial_scan(const RadialProfile& profile, const ZScan& scan, const OpticalConfig& optics,
                               double mask_radius_px, bool deconvolve) {
  optics.validate();
  std::vector<double> zs = scan.values();
  std::vector<double> curve = scan_curve(profile.values, profile.delta_r, zs, optics, mask_radius_px);
  if (deconvolve) curve = deconvolve_axial(curve, profile, scan, optics, mask_radius_px);
  return finish(std::move(zs), std::move(curve));
}

std::vector<double> wiener_deconvolve(const std::vector<double>& curve, const std::vector<double>& reference,
                                      std::size_t zero_index) {
  const std::size_t n = curve.size();
  if (reference.size() != n) throw DataError("reference and curve lengths differ");
  if (n == 0) return {};
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> c, r;
  fft.fwd(c, curve);
  fft.fwd(r, reference);
  double peak = 0.0;
  for (const auto& v : r) peak = std::max(peak, std::norm(v));
  if (!(peak > 0)) throw DataError("all-zero deconvolution reference");
  const double eps = 1e-3 * peak;
  std::vector<std::complex<double>> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = c[i] * std::conj(r[i]) / (std::norm(r[i]) + eps);
  std::vector<std::complex<double>> raw;
  fft.inv(raw, q);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = (i + n - zero_index % n) % n;
    out[i] = std::max(0.0, raw[src].real());
  }
  return out;
}

std::vector<double> deconvolve_axial(const std::vector<double>& curve, const RadialProfile& profile,
                                     const ZScan& scan, const OpticalConfig& optics, double mask_radius_px) {
  const std::vector<double> zs = scan.values();
  if (curve.size() != zs.size()) throw DataError("curve does not match the z scan");
  const std::size_t center = (zs.size() - 1) / 2;
  const int n = static_cast<int>(profile.size());
  if (n < 2 || n % 2 != 0) throw DataError("axial scan needs an even-length profile");
  Eigen::ArrayXcd impulse = Eigen::ArrayXcd::Zero(n);
  impulse[n / 2 - 1] = impulse[n / 2] = 1.0;
  const Eigen::ArrayXcd field = propagate_line<double>(impulse, profile.delta_r, -zs[center], optics);
  const Eigen::ArrayXd hologram = 2.0 * field.real();
  const std::vector<double> ref = scan_curve(hologram, profile.delta_r, zs, optics, mask_radius_px);
  return wiener_deconvolve(curve, ref, center);
}

AxialReconstruction axial_scan_2d(const Image& pixels, const Vec2& center, const ZScan& scan,
                                  const OpticalConfig& optics, double mask_radius_px, double margin_factor) {
  optics.validate();
  if (pixels.rows() != pixels.cols()) throw DataError("2D scan needs a square template");
  if (!(margin_factor >= 1.0)) throw ConfigError("template margin factor must be >= 1");
  const int side = static_cast<int>(pixels.rows());
  const double cx = center.x(), cy = center.y();
  if (!(cx >= 0 && cy >= 0 && cx <= side - 1 && cy <= side - 1)) throw DataError("scan center outside template");

  // Background from the outer 10% annulus of the inscribed disc.
  const double inscribed = std::min({cx, cy, side - 1 - cx, side - 1 - cy});
  double bg_sum = 0.0;
  long bg_n = 0;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      if (d <= inscribed && d >= 0.9 * inscribed) {
        bg_sum += pixels(y, x);
        ++bg_n;
      }
    }
  }
  const double bg = bg_n ? bg_sum / static_cast<double>(bg_n) : pixels.mean();

  const int n = std::max(side, static_cast<int>(std::lround(margin_factor * side)));
  const int off = (n - side) / 2;
  using Mat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;
  Mat field = Mat::Zero(n, n);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) field(y + off, x + off) = pixels(y, x) - bg;
  }
  const double pcx = cx + off, pcy = cy + off;

  std::vector<std::pair<int, int>> mask;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      if (std::hypot(x - pcx, y - pcy) <= mask_radius_px) mask.emplace_back(y, x);
    }
  }
  if (mask.empty()) mask.emplace_back(static_cast<int>(std::lround(pcy)), static_cast<int>(std::lround(pcx)));

  Eigen::FFT<double> fft;
  Mat spec(n, n), buf(n, n), out(n, n);
  // Column-major buffers hold the transpose; the transfer function is symmetric.
  fft.impl().fwd2(spec.data(), field.data(), n, n);
  const Eigen::ArrayXXd kz = axial_wavenumbers_2d(n, n * optics.pixel_size * 1e-3, optics.effective_wavelength() * 1e-3);
  const double norm = 1.0 / (static_cast<double>(n) * n);

  std::vector<double> zs = scan.values();
  std::vector<double> curve;
  curve.reserve(zs.size());
  for (double z : zs) {
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < n; ++r) buf(r, c) = spec(r, c) * phase_factor(kz(r, c), z);
    }
    fft.impl().inv2(out.data(), buf.data(), n, n);
    double acc = 0.0;
    for (const auto& [y, x] : mask) acc += std::norm(out(y, x) * norm);
    curve.push_back(acc / static_cast<double>(mask.size()));
  }
  return finish(std::move(zs), std::move(curve));
}

}  // namespace holotrack
