#pragma once

#include "holotrack/image.hpp"
#include "holotrack/refine.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace holotrack {

struct OpticalConfig {
  double wavelength_vacuum = 470.0;  // nm
  double refractive_index = 1.33;
  double pixel_size = 132.0;  // nm per pixel

  double effective_wavelength() const { return wavelength_vacuum / refractive_index; }  // nm
  void validate() const;
  bool operator==(const OpticalConfig&) const = default;
};

struct ZScan {
  double z_start = 10.0;  // um
  double z_step = 0.5;
  double z_end = 100.0;

  void validate() const;
  std::vector<double> values() const;
  bool operator==(const ZScan&) const = default;
};

struct AxialReconstruction {
  std::vector<double> z_values;
  std::vector<double> intensities;
  double z_star = 0.0;
  bool curve_complete = true;
};

template <typename Scalar>
using ComplexImageT = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexImage = ComplexImageT<double>;

/// Signed frequency index of FFT bin i in a length-n transform.
inline int frequency_index(int i, int n) { return i < (n + 1) / 2 ? i : i - n; }

/// Axial wavenumber 2*pi/lambda*sqrt(1 - (lambda*P/S)^2) per unit z (1/um),
/// or a negative value for evanescent bins. `extent_um` is S.
Eigen::ArrayXd axial_wavenumbers_1d(int n, double extent_um, double lambda_um);

/// Transfer function of a square n x n grid at distance z (um); evanescent bins are 0.
ComplexImage transfer_function_2d(int n, double z_um, const OpticalConfig& optics);

/// Angular spectrum propagation of a square field by z micrometres.
template <typename Scalar>
ComplexImageT<Scalar> propagate_2d(const ComplexImageT<Scalar>& field, double z_um, const OpticalConfig& optics) {
  if (field.rows() != field.cols()) throw std::invalid_argument("propagate_2d needs a square field");
  using C = std::complex<Scalar>;
  using Mat = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = static_cast<int>(field.rows());
  Eigen::FFT<Scalar> fft;
  Mat spectrum(n, n);
  Mat src = field.matrix();
  fft.impl().fwd2(spectrum.data(), src.data(), n, n);
  const ComplexImage h = transfer_function_2d(n, z_um, optics);
  // Column-major spectrum against a row-major transfer function; h is symmetric in (P, Q).
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) spectrum(r, c) *= C(static_cast<Scalar>(h(r, c).real()), static_cast<Scalar>(h(r, c).imag()));
  }
  Mat out(n, n);
  fft.impl().inv2(out.data(), spectrum.data(), n, n);
  return out.array() / static_cast<Scalar>(static_cast<double>(n) * n);
}

/// 1D propagation of a sampled line with spacing `spacing_px` pixels.
template <typename Scalar>
Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1> propagate_line(
    const Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1>& line, double spacing_px, double z_um,
    const OpticalConfig& optics) {
  using C = std::complex<Scalar>;
  const int n = static_cast<int>(line.size());
  if (n % 2 != 0) throw std::invalid_argument("propagate_1d needs an even-length profile");
  const double lambda = optics.effective_wavelength() * 1e-3;
  const Eigen::ArrayXd kz = axial_wavenumbers_1d(n, n * spacing_px * optics.pixel_size * 1e-3, lambda);
  Eigen::FFT<Scalar> fft;
  std::vector<C> src(line.data(), line.data() + n), spec;
  fft.fwd(spec, src);
  for (int i = 0; i < n; ++i) {
    spec[static_cast<std::size_t>(i)] *= kz[i] < 0 ? C(0)
                                        : C(static_cast<Scalar>(std::cos(-z_um * kz[i])),
                                            static_cast<Scalar>(std::sin(-z_um * kz[i])));
  }
  std::vector<C> out;
  fft.inv(out, spec);
  Eigen::Array<C, Eigen::Dynamic, 1> res(n);
  for (int i = 0; i < n; ++i) res[i] = out[static_cast<std::size_t>(i)];
  return res;
}

/// 1D propagation of a mirrored radial profile.
Eigen::ArrayXcd propagate_1d(const RadialProfile& profile, double z_um, const OpticalConfig& optics);

/// Pads both ends to round(margin_factor * M) samples (rounded up to even)
/// with the mean of the outer 10% of the samples.
RadialProfile extend_profile(const RadialProfile& profile, double margin_factor);

/// Samples averaged by the paraxial mask on each side of the profile center.
int mask_half_width(double mask_radius_px, double delta_r);

/// Mean of the profile's outer 10% of samples.
double profile_background(const Eigen::ArrayXd& values);

/// Center-region reconstructed intensity over the scan. The background level
/// is removed before propagation so only the scattered field is focused.
AxialReconstruction axial_scan(const RadialProfile& profile, const ZScan& scan, const OpticalConfig& optics,
                               double mask_radius_px, bool deconvolve);

/// Wiener deconvolution by the axial curve of an ideal point source placed at
/// the scan center. `profile` supplies the sampling geometry.
std::vector<double> deconvolve_axial(const std::vector<double>& curve, const RadialProfile& profile,
                                     const ZScan& scan, const OpticalConfig& optics, double mask_radius_px);

/// Same as deconvolve_axial against an explicit reference curve; zero lag is
/// placed at index `zero_index`.
std::vector<double> wiener_deconvolve(const std::vector<double>& curve, const std::vector<double>& reference,
                                      std::size_t zero_index);

/// Full 2D scan on a square template: the template is padded to
/// round(margin_factor * side) with its border mean and propagated plane by
/// plane; intensity is averaged over pixels within mask_radius of `center`.
AxialReconstruction axial_scan_2d(const Image& pixels, const Vec2& center, const ZScan& scan,
                                  const OpticalConfig& optics, double mask_radius_px, double margin_factor);

/// Index of the largest value; ties resolve to the first.
std::size_t argmax_first(const std::vector<double>& v);

}  // namespace holotrack
