#include "holotrack/track.hpp"

#include "holotrack/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace holotrack {

// ---------------------------------------------------------------------------
// Kalman

namespace {

Eigen::Matrix4d transition() {
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 2) = 1.0;
  f(1, 3) = 1.0;
  return f;
}

Eigen::Matrix4d process_noise(const KalmanParams& p) {
  return Eigen::Vector4d(p.process_position_noise, p.process_position_noise, p.process_velocity_noise,
                         p.process_velocity_noise)
      .asDiagonal();
}

void check_finite(const KalmanState& s) {
  if (!s.state.allFinite() || !s.covariance.allFinite()) throw DataError("non-finite Kalman state");
}

}  // namespace

KalmanState kalman_init(const Vec2& position, const KalmanParams& params) {
  KalmanState s;
  s.state << position.x(), position.y(), 0.0, 0.0;
  s.covariance = Eigen::Vector4d(params.initial_position_variance, params.initial_position_variance,
                                 params.initial_velocity_variance, params.initial_velocity_variance)
                     .asDiagonal();
  return s;
}

KalmanState kalman_predict(const KalmanState& s, const KalmanParams& params) {
  const Eigen::Matrix4d f = transition();
  KalmanState out;
  out.state = f * s.state;
  out.covariance = f * s.covariance * f.transpose() + process_noise(params);
  return out;
}

KalmanState kalman_update(const KalmanState& prior, const Vec2& measurement, const KalmanParams& params) {
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  const Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * params.measurement_noise;
  const Eigen::Vector2d innovation = measurement - h * prior.state;
  const Eigen::Matrix2d s = h * prior.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 4, 2> gain = prior.covariance * h.transpose() * s.inverse();
  KalmanState out;
  out.state = prior.state + gain * innovation;
  // Joseph form keeps the covariance symmetric positive semidefinite.
  const Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity() - gain * h;
  out.covariance = ikh * prior.covariance * ikh.transpose() + gain * r * gain.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

KalmanState kalman_step(const KalmanState& s, const std::optional<Vec2>& measurement, const KalmanParams& params) {
  check_finite(s);
  if (measurement && !measurement->allFinite()) throw DataError("non-finite measurement");
  KalmanState out = kalman_predict(s, params);
  if (measurement) out = kalman_update(out, *measurement, params);
  check_finite(out);
  return out;
}

// ---------------------------------------------------------------------------
// Hungarian

namespace {

// Shortest augmenting path with potentials on a square matrix; returns the
// column assigned to each row.
std::vector<int> solve_square(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<std::size_t>(j)] != 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment hungarian_assign(const Eigen::MatrixXd& cost, double cost_non_assignment) {
  const int nt = static_cast<int>(cost.rows());
  const int nd = static_cast<int>(cost.cols());
  Assignment out;
  out.track_to_detection.assign(static_cast<std::size_t>(nt), -1);
  out.detection_to_track.assign(static_cast<std::size_t>(nd), -1);
  const double slot = 0.5 * cost_non_assignment;
  if (nt == 0 || nd == 0) {
    out.total_cost = slot * (nt + nd);
    return out;
  }
  // Finite stand-in for forbidden cells, larger than any feasible total.
  const double forbidden = (cost.cwiseAbs().sum() + slot * (nt + nd) + 1.0) * 4.0;
  const int n = nt + nd;
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, forbidden);
  a.topLeftCorner(nt, nd) = cost;
  for (int i = 0; i < nt; ++i) a(i, nd + i) = slot;     // track i unassigned
  for (int j = 0; j < nd; ++j) a(nt + j, j) = slot;     // detection j unassigned
  a.bottomRightCorner(nd, nt).setZero();
  const std::vector<int> r2c = solve_square(a);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int j = r2c[static_cast<std::size_t>(i)];
    total += a(i, j);
    if (i < nt && j < nd) {
      out.track_to_detection[static_cast<std::size_t>(i)] = j;
      out.detection_to_track[static_cast<std::size_t>(j)] = i;
    }
  }
  out.total_cost = total;
  return out;
}

// ---------------------------------------------------------------------------
// Templates

std::optional<Template> extract_template(const Frame& frame, const Vec2& center, int radius, bool boundary_required) {
  if (radius < 1) throw ConfigError("template radius must be >= 1");
  Template t;
  t.center = center;
  t.radius = radius;
  const int side = 2 * radius + 1;
  const auto cx = static_cast<Eigen::Index>(std::lround(center.x()));
  const auto cy = static_cast<Eigen::Index>(std::lround(center.y()));
  const Eigen::Index x0 = cx - radius, y0 = cy - radius;
  const Eigen::Index w = frame.width(), h = frame.height();
  t.complete = x0 >= 0 && y0 >= 0 && x0 + side <= w && y0 + side <= h;
  if (!t.complete && boundary_required) return std::nullopt;
  if (t.complete) {
    t.pixels = frame.intensities.block(y0, x0, side, side);
    return t;
  }
  t.pixels = Image::Constant(side, side, median(frame.intensities));
  const Eigen::Index sx = std::max<Eigen::Index>(0, x0), sy = std::max<Eigen::Index>(0, y0);
  const Eigen::Index ex = std::min<Eigen::Index>(w, x0 + side), ey = std::min<Eigen::Index>(h, y0 + side);
  if (ex > sx && ey > sy) {
    t.pixels.block(sy - y0, sx - x0, ey - sy, ex - sx) = frame.intensities.block(sy, sx, ey - sy, ex - sx);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Tracker

void TrackParams::validate() const {
  if (!(cost_non_assignment > 0)) throw ConfigError("cost_of_nonassignment must be > 0");
  if (!(max_travel > 0)) throw ConfigError("maximum_travel_distance must be > 0");
  if (max_tracks < 1) throw ConfigError("number_of_tracks must be >= 1");
  if (template_radius < 10 || template_radius > 500) throw ConfigError("template_size must be in [10, 500]");
  if (max_misses < 1) throw ConfigError("max_misses must be >= 1");
  const KalmanParams& k = kalman;
  if (!(k.initial_position_variance > 0) || !(k.initial_velocity_variance > 0) || !(k.process_position_noise > 0) ||
      !(k.process_velocity_noise > 0) || !(k.measurement_noise > 0)) {
    throw ConfigError("kalman noise parameters must be > 0");
  }
}

Tracker::Tracker(TrackParams params) : params_(params) { params_.validate(); }

int Tracker::active_count() const {
  return static_cast<int>(std::count_if(tracks_.begin(), tracks_.end(), [](const Track& t) { return t.active; }));
}

void Tracker::refresh_template(Track& t, const Frame& frame) const {
  const TrackSample& s = t.history.back();
  t.templ = extract_template(frame, {s.x, s.y}, params_.template_radius, params_.boundary_required);
}

void Tracker::advance(const std::vector<Detection>& input, const Frame& frame) {
  // Canonical detection order makes the result independent of input order.
  std::vector<Detection> dets = input;
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  std::vector<int> live;
  for (int i = 0; i < static_cast<int>(tracks_.size()); ++i) {
    Track& t = tracks_[static_cast<std::size_t>(i)];
    t.updated = false;
    if (!t.active) continue;
    t.kalman = kalman_step(t.kalman, std::nullopt, params_.kalman);
    live.push_back(i);
  }

  const double gated = 2.0 * params_.cost_non_assignment;
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(live.size()), static_cast<Eigen::Index>(dets.size()));
  for (std::size_t r = 0; r < live.size(); ++r) {
    const Vec2 pred = tracks_[static_cast<std::size_t>(live[r])].kalman.position();
    for (std::size_t c = 0; c < dets.size(); ++c) {
      const double d = std::hypot(pred.x() - dets[c].x, pred.y() - dets[c].y);
      cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = d > params_.max_travel ? gated : d;
    }
  }
  const Assignment asg = hungarian_assign(cost, params_.cost_non_assignment);

  for (std::size_t r = 0; r < live.size(); ++r) {
    Track& t = tracks_[static_cast<std::size_t>(live[r])];
    const int j = asg.track_to_detection[r];
    if (j >= 0) {
      const Detection& d = dets[static_cast<std::size_t>(j)];
      t.kalman = kalman_update(t.kalman, {d.x, d.y}, params_.kalman);
      t.history.push_back({frame.index, d.x, d.y, d.score});
      t.misses = 0;
      t.updated = true;
      refresh_template(t, frame);
    } else {
      t.templ.reset();
      if (++t.misses > params_.max_misses) t.active = false;
    }
  }

  for (std::size_t c = 0; c < dets.size(); ++c) {
    if (asg.detection_to_track[c] >= 0) continue;
    if (active_count() >= params_.max_tracks) break;
    const Detection& d = dets[c];
    Track t;
    t.id = next_id_++;
    t.kalman = kalman_init({d.x, d.y}, params_.kalman);
    t.history.push_back({frame.index, d.x, d.y, d.score});
    t.updated = true;
    refresh_template(t, frame);
    tracks_.push_back(std::move(t));
  }
}

}  // namespace holotrack
