#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace holotrack {

// Row-major so that (y, x) indexing walks memory in raster order.
template <typename Scalar>
using ImageT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Image = ImageT<double>;
using Mask = ImageT<bool>;

using Vec2 = Eigen::Vector2d;

/// Bilinear sample at continuous pixel coordinates (x = column, y = row).
/// Coordinates outside the grid are clamped to the border.
template <typename Derived>
typename Derived::Scalar bilinear(const Eigen::DenseBase<Derived>& img, double x, double y) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index w = img.cols();
  const Eigen::Index h = img.rows();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(x));
  Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(y));
  x0 = std::min(x0, w - 2 < 0 ? Eigen::Index{0} : w - 2);
  y0 = std::min(y0, h - 2 < 0 ? Eigen::Index{0} : h - 2);
  const Eigen::Index x1 = std::min(x0 + 1, w - 1);
  const Eigen::Index y1 = std::min(y0 + 1, h - 1);
  const Scalar fx = static_cast<Scalar>(x - static_cast<double>(x0));
  const Scalar fy = static_cast<Scalar>(y - static_cast<double>(y0));
  const Scalar top = img(y0, x0) * (Scalar(1) - fx) + img(y0, x1) * fx;
  const Scalar bottom = img(y1, x0) * (Scalar(1) - fx) + img(y1, x1) * fx;
  return top * (Scalar(1) - fy) + bottom * fy;
}

/// Sampled, unit-sum Gaussian of `size` taps (size odd).
std::vector<double> gaussian_kernel_1d(int size, double sigma);

/// Separable convolution with a symmetric 1D kernel; borders replicate.
Image convolve_separable(const Image& img, const std::vector<double>& kernel);

/// Gaussian blur with an odd kernel size and the given sigma.
Image gaussian_blur(const Image& img, int kernel_size, double sigma);

/// Resize with bilinear interpolation using pixel-centre alignment.
Image resize_bilinear(const Image& img, Eigen::Index new_width, Eigen::Index new_height);

/// Halve both dimensions (2x2 block average, the exact bilinear result at scale 1/2).
Image downsample_half(const Image& img);

/// Upsample a map produced at pyramid level `level` back to `width` x `height`
/// with bilinear interpolation and the matching pixel-centre alignment.
Image upsample_to(const Image& img, int level, Eigen::Index width, Eigen::Index height);

double median(const Image& img);

}  // namespace holotrack
