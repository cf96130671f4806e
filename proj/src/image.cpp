#include "holotrack/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace holotrack {

std::vector<double> gaussian_kernel_1d(int size, double sigma) {
  if (size < 1 || size % 2 == 0) {
    throw std::invalid_argument("gaussian kernel size must be odd and positive");
  }
  std::vector<double> k(static_cast<std::size_t>(size));
  const int half = size / 2;
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = sigma > 0.0 ? std::exp(-0.5 * (i * i) / (sigma * sigma)) : (i == 0 ? 1.0 : 0.0);
    k[static_cast<std::size_t>(i + half)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

Image convolve_separable(const Image& img, const std::vector<double>& kernel) {
  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();
  const int half = static_cast<int>(kernel.size()) / 2;
  Image tmp(h, w);
  std::vector<double> row(static_cast<std::size_t>(w + 2 * half));
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index i = 0; i < w + 2 * half; ++i) {
      row[static_cast<std::size_t>(i)] = img(y, std::clamp<Eigen::Index>(i - half, 0, w - 1));
    }
    for (Eigen::Index x = 0; x < w; ++x) {
      const double* src = row.data() + x;
      double acc = 0.0;
      for (int k = 0; k <= 2 * half; ++k) acc += kernel[static_cast<std::size_t>(k)] * src[k];
      tmp(y, x) = acc;
    }
  }
  Image out = Image::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (int k = -half; k <= half; ++k) {
      const Eigen::Index yy = std::clamp<Eigen::Index>(y + k, 0, h - 1);
      out.row(y) += kernel[static_cast<std::size_t>(k + half)] * tmp.row(yy);
    }
  }
  return out;
}

Image gaussian_blur(const Image& img, int kernel_size, double sigma) {
  if (kernel_size <= 1) return img;
  return convolve_separable(img, gaussian_kernel_1d(kernel_size, sigma));
}

Image resize_bilinear(const Image& img, Eigen::Index new_width, Eigen::Index new_height) {
  if (new_width <= 0 || new_height <= 0) {
    throw std::invalid_argument("resize to zero pixels");
  }
  if (new_width == img.cols() && new_height == img.rows()) return img;
  const double sx = static_cast<double>(img.cols()) / static_cast<double>(new_width);
  const double sy = static_cast<double>(img.rows()) / static_cast<double>(new_height);
  Image out(new_height, new_width);
  for (Eigen::Index y = 0; y < new_height; ++y) {
    const double src_y = (static_cast<double>(y) + 0.5) * sy - 0.5;
    for (Eigen::Index x = 0; x < new_width; ++x) {
      const double src_x = (static_cast<double>(x) + 0.5) * sx - 0.5;
      out(y, x) = bilinear(img, src_x, src_y);
    }
  }
  return out;
}

Image downsample_half(const Image& img) {
  const Eigen::Index h = std::max<Eigen::Index>(1, img.rows() / 2);
  const Eigen::Index w = std::max<Eigen::Index>(1, img.cols() / 2);
  if (img.rows() < 2 || img.cols() < 2) return resize_bilinear(img, w, h);
  Image out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      out(y, x) = 0.25 * (img(2 * y, 2 * x) + img(2 * y, 2 * x + 1) + img(2 * y + 1, 2 * x) +
                          img(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

Image upsample_to(const Image& img, int level, Eigen::Index width, Eigen::Index height) {
  if (level == 0 && img.cols() == width && img.rows() == height) return img;
  const double scale = std::ldexp(1.0, -level);
  Image out(height, width);
  // Coordinate-wise separable weights, computed once per row/column.
  std::vector<Eigen::Index> x0(static_cast<std::size_t>(width)), y0(static_cast<std::size_t>(height));
  std::vector<double> fx(static_cast<std::size_t>(width)), fy(static_cast<std::size_t>(height));
  auto prep = [scale](Eigen::Index n, Eigen::Index src_n, std::vector<Eigen::Index>& i0,
                      std::vector<double>& f) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
      Eigen::Index b = static_cast<Eigen::Index>(std::floor(s));
      b = std::min(b, std::max<Eigen::Index>(0, src_n - 2));
      i0[static_cast<std::size_t>(i)] = b;
      f[static_cast<std::size_t>(i)] = s - static_cast<double>(b);
    }
  };
  prep(width, img.cols(), x0, fx);
  prep(height, img.rows(), y0, fy);
  const Eigen::Index last_x = img.cols() - 1;
  const Eigen::Index last_y = img.rows() - 1;
  for (Eigen::Index y = 0; y < height; ++y) {
    const Eigen::Index ya = y0[static_cast<std::size_t>(y)];
    const Eigen::Index yb = std::min(ya + 1, last_y);
    const double wy = fy[static_cast<std::size_t>(y)];
    for (Eigen::Index x = 0; x < width; ++x) {
      const Eigen::Index xa = x0[static_cast<std::size_t>(x)];
      const Eigen::Index xb = std::min(xa + 1, last_x);
      const double wx = fx[static_cast<std::size_t>(x)];
      const double top = img(ya, xa) * (1.0 - wx) + img(ya, xb) * wx;
      const double bottom = img(yb, xa) * (1.0 - wx) + img(yb, xb) * wx;
      out(y, x) = top * (1.0 - wy) + bottom * wy;
    }
  }
  return out;
}

double median(const Image& img) {
  std::vector<double> v(img.data(), img.data() + img.size());
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace holotrack
