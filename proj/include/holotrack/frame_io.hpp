#pragma once

#include "holotrack/image.hpp"

#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace holotrack {

/// Maps pixel coordinates of a processed frame back to the source frame:
/// src = offset + (p + 0.5) / scale - 0.5.
struct FrameGeometry {
  double offset_x = 0.0;
  double offset_y = 0.0;
  double scale = 1.0;

  Vec2 to_source(const Vec2& p) const {
    return {offset_x + (p.x() + 0.5) / scale - 0.5, offset_y + (p.y() + 0.5) / scale - 0.5};
  }
  Vec2 from_source(const Vec2& s) const {
    return {(s.x() - offset_x + 0.5) * scale - 0.5, (s.y() - offset_y + 0.5) * scale - 0.5};
  }
};

struct Frame {
  Image intensities;  // rows = height, cols = width
  int index = 0;
  double pixel_size = 132.0;  // nm per pixel
  FrameGeometry geometry;

  Frame() = default;
  Frame(Image img, int idx, double px_nm) : intensities(std::move(img)), index(idx), pixel_size(px_nm) {}

  Eigen::Index width() const { return intensities.cols(); }
  Eigen::Index height() const { return intensities.rows(); }
};

struct Roi {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  bool operator==(const Roi&) const = default;
};

enum class BackgroundMode { None, Static, MovingAverage };

struct PreprocessConfig {
  std::optional<Roi> roi;
  int boundary_margin = 0;
  double resize_factor = 1.0;
  int gaussian_kernel = 0;  // 0 disables, otherwise odd
  bool normalize = true;
  BackgroundMode background = BackgroundMode::None;
  int background_window = 10;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  bool operator==(const PreprocessConfig&) const = default;
};

inline constexpr double kDivisionGuard = 1e-6;

/// Per-pixel background average over a window of W frames.
class BackgroundModel {
 public:
  BackgroundModel(BackgroundMode mode, int window);

  BackgroundMode mode() const { return mode_; }
  int window() const { return window_; }
  std::size_t size() const { return buffer_.size(); }
  bool empty() const { return buffer_.empty(); }
  bool full() const { return static_cast<int>(buffer_.size()) >= window_; }
  const Image& mean() const { return mean_; }

  /// Adds a frame. A full MovingAverage buffer drops its oldest frame; a full
  /// Static model ignores further frames.
  void push(const Image& frame);

 private:
  void recompute();

  BackgroundMode mode_;
  int window_;
  std::deque<Image> buffer_;
  Image sum_;
  Image mean_;
  int updates_since_recompute_ = 0;
};

/// output = frame / max(mean, kDivisionGuard); MovingAverage models are then
/// updated with the frame.
Frame normalize_with_background(const Frame& frame, BackgroundModel& model);

/// ROI crop -> boundary crop -> bilinear resize -> [0,1] normalisation ->
/// Gaussian blur (sigma = kernel / 6).
Frame preprocess(const Frame& frame, const PreprocessConfig& config);

/// Affine map of the observed range onto [0, 1]; constant input maps to zeros.
Image normalize_range(const Image& img);

/// Lazily loaded, name-sorted image sequence in a directory.
class ImageSequence {
 public:
  /// Throws DataError for a missing directory, no readable images or
  /// inconsistent dimensions.
  explicit ImageSequence(const std::filesystem::path& dir, double pixel_size_nm = 132.0);

  std::size_t size() const { return files_.size(); }
  Eigen::Index width() const { return width_; }
  Eigen::Index height() const { return height_; }
  const std::vector<std::filesystem::path>& files() const { return files_; }

  Frame load(std::size_t i) const;

 private:
  std::vector<std::filesystem::path> files_;
  Eigen::Index width_ = 0;
  Eigen::Index height_ = 0;
  double pixel_size_;
};

/// Loads and preprocesses every frame of a directory.
std::vector<Frame> load_sequence(const std::filesystem::path& dir, const PreprocessConfig& config,
                                 double pixel_size_nm = 132.0);

}  // namespace holotrack
