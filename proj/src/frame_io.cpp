#include "holotrack/frame_io.hpp"

#include "holotrack/errors.hpp"
#include "holotrack/image_io.hpp"

#include <algorithm>
#include <cmath>

namespace holotrack {
namespace fs = std::filesystem;

void PreprocessConfig::validate() const {
  if (roi && (roi->x0 < 0 || roi->y0 < 0 || roi->width <= 0 || roi->height <= 0)) {
    throw ConfigError("roi must have non-negative origin and positive size");
  }
  if (boundary_margin < 0) throw ConfigError("boundary_region must be >= 0");
  if (!(resize_factor > 0.0) || !std::isfinite(resize_factor)) throw ConfigError("resize_factor must be > 0");
  if (gaussian_kernel < 0 || (gaussian_kernel != 0 && gaussian_kernel % 2 == 0)) {
    throw ConfigError("gaussian_kernel_size must be 0 or odd");
  }
  if (background_window < 1) throw ConfigError("number_of_background_images must be >= 1");
}

// ---------------------------------------------------------------------------

BackgroundModel::BackgroundModel(BackgroundMode mode, int window) : mode_(mode), window_(window) {
  if (window < 1) throw ConfigError("background window must be >= 1");
}

void BackgroundModel::push(const Image& frame) {
  if (!buffer_.empty() && (frame.rows() != sum_.rows() || frame.cols() != sum_.cols())) {
    throw DataError("background frame dimension mismatch");
  }
  if (mode_ == BackgroundMode::Static && full()) return;
  if (buffer_.empty()) sum_ = Image::Zero(frame.rows(), frame.cols());
  buffer_.push_back(frame);
  sum_ += frame;
  if (static_cast<int>(buffer_.size()) > window_) {
    sum_ -= buffer_.front();
    buffer_.pop_front();
  }
  // The running sum is rebuilt once per window so rounding cannot accumulate.
  if (++updates_since_recompute_ >= window_) {
    recompute();
  } else {
    mean_ = sum_ / static_cast<double>(buffer_.size());
  }
}

void BackgroundModel::recompute() {
  sum_.setZero();
  for (const Image& f : buffer_) sum_ += f;
  mean_ = sum_ / static_cast<double>(buffer_.size());
  updates_since_recompute_ = 0;
}

Frame normalize_with_background(const Frame& frame, BackgroundModel& model) {
  if (model.empty()) throw DataError("background model holds no frames");
  if (model.mean().rows() != frame.height() || model.mean().cols() != frame.width()) {
    throw DataError("background dimension mismatch");
  }
  Frame out = frame;
  out.intensities = frame.intensities / model.mean().max(kDivisionGuard);
  if (model.mode() == BackgroundMode::MovingAverage) model.push(frame.intensities);
  return out;
}

// ---------------------------------------------------------------------------

Image normalize_range(const Image& img) {
  const double lo = img.minCoeff();
  const double hi = img.maxCoeff();
  if (!(hi > lo)) return Image::Zero(img.rows(), img.cols());
  return (img - lo) / (hi - lo);
}

Frame preprocess(const Frame& frame, const PreprocessConfig& config) {
  config.validate();
  Frame out = frame;
  Eigen::Index x0 = 0, y0 = 0, w = frame.width(), h = frame.height();
  if (config.roi) {
    const Roi& r = *config.roi;
    if (r.x0 + r.width > frame.width() || r.y0 + r.height > frame.height()) {
      throw DataError("ROI outside frame");
    }
    x0 = r.x0;
    y0 = r.y0;
    w = r.width;
    h = r.height;
  }
  const Eigen::Index m = config.boundary_margin;
  if (2 * m >= w || 2 * m >= h) throw DataError("boundary margin removes the whole frame");
  x0 += m;
  y0 += m;
  w -= 2 * m;
  h -= 2 * m;
  Image img = frame.intensities.block(y0, x0, h, w);
  out.geometry.offset_x = frame.geometry.offset_x + static_cast<double>(x0) / frame.geometry.scale;
  out.geometry.offset_y = frame.geometry.offset_y + static_cast<double>(y0) / frame.geometry.scale;

  if (config.resize_factor != 1.0) {
    const auto nw = static_cast<Eigen::Index>(std::lround(static_cast<double>(w) * config.resize_factor));
    const auto nh = static_cast<Eigen::Index>(std::lround(static_cast<double>(h) * config.resize_factor));
    if (nw <= 0 || nh <= 0) throw DataError("resize to zero pixels");
    img = resize_bilinear(img, nw, nh);
    out.pixel_size = frame.pixel_size / config.resize_factor;
    out.geometry.scale = frame.geometry.scale * config.resize_factor;
  }
  if (config.normalize) img = normalize_range(img);
  if (config.gaussian_kernel > 1) {
    img = gaussian_blur(img, config.gaussian_kernel, config.gaussian_kernel / 6.0);
  }
  out.intensities = std::move(img);
  return out;
}

// ---------------------------------------------------------------------------

ImageSequence::ImageSequence(const fs::path& dir, double pixel_size_nm) : pixel_size_(pixel_size_nm) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DataError("missing directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_supported_image(entry.path())) files_.push_back(entry.path());
  }
  if (files_.empty()) throw DataError("no frames in " + dir.string());
  std::sort(files_.begin(), files_.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  for (std::size_t i = 0; i < files_.size(); ++i) {
    const ImageInfo info = probe_image(files_[i]);
    if (i == 0) {
      width_ = info.width;
      height_ = info.height;
    } else if (info.width != width_ || info.height != height_) {
      throw DataError("inconsistent dimensions: " + files_[i].filename().string());
    }
  }
}

Frame ImageSequence::load(std::size_t i) const {
  Image img = read_image(files_.at(i));
  if (img.cols() != width_ || img.rows() != height_) {
    throw DataError("inconsistent dimensions: " + files_[i].filename().string());
  }
  return Frame(std::move(img), static_cast<int>(i), pixel_size_);
}

std::vector<Frame> load_sequence(const fs::path& dir, const PreprocessConfig& config, double pixel_size_nm) {
  config.validate();
  const ImageSequence seq(dir, pixel_size_nm);
  std::vector<Frame> frames;
  frames.reserve(seq.size());
  std::optional<BackgroundModel> model;
  if (config.background != BackgroundMode::None) {
    model.emplace(config.background, config.background_window);
    if (config.background == BackgroundMode::Static) {
      for (std::size_t i = 0; i < seq.size() && !model->full(); ++i) model->push(seq.load(i).intensities);
    }
  }
  for (std::size_t i = 0; i < seq.size(); ++i) {
    Frame f = seq.load(i);
    if (model) {
      if (model->empty()) model->push(f.intensities);
      f = normalize_with_background(f, *model);
    }
    frames.push_back(preprocess(f, config));
  }
  return frames;
}

}  // namespace holotrack
