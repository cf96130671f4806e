#pragma once

#include "holotrack/image.hpp"
#include "holotrack/track.hpp"

#include <numbers>
#include <optional>

namespace holotrack {

enum class SamplingMode { Circular, Sector };

/// Angle-averaged intensity mirrored into an even-length symmetric signal.
/// The profile center lies between samples size()/2 - 1 and size()/2.
struct RadialProfile {
  Eigen::ArrayXd values;
  double delta_r = 0.5;
  Vec2 origin_center = Vec2::Zero();
  SamplingMode mode = SamplingMode::Circular;
  std::optional<double> heading;

  Eigen::Index size() const { return values.size(); }
};

struct ProfileParams {
  SamplingMode mode = SamplingMode::Circular;
  double delta_r = 0.5;
  double delta_theta = 2.0 * std::numbers::pi / 64.0;
  bool xcorr = true;

  void validate() const;
  bool operator==(const ProfileParams&) const = default;
};

/// Half-width of each Sector arc.
inline constexpr double kSectorHalfWidth = std::numbers::pi / 6.0;

/// Polar resampling around `center` (template pixel coordinates) with bilinear
/// interpolation, averaged over angles and mirrored. Sector mode samples two
/// opposed arcs perpendicular to `heading`.
RadialProfile radial_profile(const Image& pixels, const Vec2& center, SamplingMode mode, double delta_r,
                             double delta_theta, std::optional<double> heading = std::nullopt);

/// Same, with `center` in frame coordinates.
RadialProfile radial_profile(const Template& t, const Vec2& center, SamplingMode mode, double delta_r,
                             double delta_theta, std::optional<double> heading = std::nullopt);

struct XcorrResult {
  Vec2 center = Vec2::Zero();  // frame coordinates
  int iterations = 0;
  bool converged = false;
};

/// Mirror cross-correlation center refinement on a template. `initial` is in
/// frame coordinates.
XcorrResult xcorr_refine(const Template& t, const Vec2& initial);

/// Sub-pixel shift that best aligns a line with its mirror image: the
/// symmetry center sits at (size - 1) / 2 + returned value.
double mirror_offset(const Eigen::ArrayXd& line);

}  // namespace holotrack
