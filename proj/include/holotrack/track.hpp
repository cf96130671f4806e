#pragma once

#include "holotrack/detect.hpp"
#include "holotrack/frame_io.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace holotrack {

/// Noise model of the constant-velocity filter, in px^2 (per frame for Q).
struct KalmanParams {
  double initial_position_variance = 100.0;
  double initial_velocity_variance = 25.0;
  double process_position_noise = 1.0;
  double process_velocity_noise = 0.25;
  double measurement_noise = 1.0;

  bool operator==(const KalmanParams&) const = default;
};

/// State (x, y, vx, vy) and its covariance.
struct KalmanState {
  Eigen::Vector4d state = Eigen::Vector4d::Zero();
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();

  Vec2 position() const { return state.head<2>(); }
  Vec2 velocity() const { return state.tail<2>(); }
};

KalmanState kalman_init(const Vec2& position, const KalmanParams& params);
KalmanState kalman_predict(const KalmanState& s, const KalmanParams& params);
KalmanState kalman_update(const KalmanState& prior, const Vec2& measurement, const KalmanParams& params);

/// One predict step followed by an update when a measurement is given.
/// Throws DataError on a non-finite state.
KalmanState kalman_step(const KalmanState& s, const std::optional<Vec2>& measurement, const KalmanParams& params);

struct Assignment {
  std::vector<int> track_to_detection;  // -1 = unassigned
  std::vector<int> detection_to_track;  // -1 = unassigned
  double total_cost = 0.0;              // includes non-assignment penalties
};

/// Minimum-cost partial matching. Leaving a track or a detection unmatched
/// costs cost_non_assignment / 2 each, so an isolated pair is matched only
/// when its cost is below cost_non_assignment.
Assignment hungarian_assign(const Eigen::MatrixXd& cost, double cost_non_assignment);

/// Square intensity patch around a particle.
struct Template {
  Image pixels;
  Vec2 center = Vec2::Zero();  // sub-pixel, frame coordinates
  int radius = 0;
  bool complete = false;

  int side() const { return 2 * radius + 1; }
  /// Frame coordinates of pixel (0, 0).
  Vec2 origin() const {
    return {std::round(center.x()) - radius, std::round(center.y()) - radius};
  }
  Vec2 local_center() const { return center - origin(); }
};

/// Copies the (2R+1)^2 square around round(center); pixels outside the frame
/// take the frame median. Returns nullopt for an incomplete template when
/// boundary_required is set.
std::optional<Template> extract_template(const Frame& frame, const Vec2& center, int radius, bool boundary_required);

struct TrackParams {
  double cost_non_assignment = 80.0;
  double max_travel = 100.0;
  int max_tracks = 50;
  int template_radius = 200;
  bool boundary_required = true;
  int max_misses = 5;
  KalmanParams kalman;

  void validate() const;
  bool operator==(const TrackParams&) const = default;
};

struct TrackSample {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
  double z = std::numeric_limits<double>::quiet_NaN();
};

struct Track {
  int id = 0;
  KalmanState kalman;
  std::vector<TrackSample> history;
  std::optional<Template> templ;  // empty when this frame's template was rejected
  int misses = 0;
  bool active = true;
  bool updated = false;  // assigned a detection in the latest frame
};

/// Kalman + Hungarian multi-target tracker; owns track identities.
class Tracker {
 public:
  explicit Tracker(TrackParams params);

  /// Advances all tracks by one frame of detections.
  void advance(const std::vector<Detection>& detections, const Frame& frame);

  const std::vector<Track>& tracks() const { return tracks_; }
  std::vector<Track>& tracks() { return tracks_; }
  const TrackParams& params() const { return params_; }
  int active_count() const;

 private:
  void refresh_template(Track& t, const Frame& frame) const;

  TrackParams params_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
};

}  // namespace holotrack
