#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <limits>
#include <vector>

namespace holotrack {

struct TrajectorySample {
  int frame = 0;
  double x = 0.0;  // px
  double y = 0.0;  // px
  double z = std::numeric_limits<double>::quiet_NaN();  // um
};

struct RawTrajectory {
  int track_id = 0;
  std::vector<TrajectorySample> samples;
};

struct TrajectoryRecord {
  int track_id = 0;
  std::vector<TrajectorySample> samples;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double mean_z = std::numeric_limits<double>::quiet_NaN();
  double z_std = 0.0;
  double travel = 0.0;      // px between first and last sample
  double speed = 0.0;       // um/s from first and last positions
  double step_speed = 0.0;  // um/s, mean of per-step speeds
};

struct FlowFilter {
  double min_travel = 5.0;  // px
  int min_track_size = 5;
  double max_axial_std = 5.0;  // um
  double frame_rate = 200.0;   // Hz
  double z_min = 0.0;
  double z_max = 1000.0;
  double fit_min = 0.0;
  double fit_max = 55.0;
  double bin_width = 2.0;  // um

  void validate() const;
  bool operator==(const FlowFilter&) const = default;
};

/// Statistics of one track without filtering. Samples with a non-finite z are
/// ignored for mean_z and z_std.
TrajectoryRecord summarize_trajectory(const RawTrajectory& t, double frame_rate, double conversion_nm_per_px);

/// Summaries of the tracks that pass every filter.
std::vector<TrajectoryRecord> analyze_trajectories(const std::vector<RawTrajectory>& tracks, const FlowFilter& filter,
                                                   double conversion_nm_per_px);

struct PolynomialFit {
  int order = 2;
  Eigen::VectorXd coefficients;  // ascending degree
  double r_squared = 0.0;
  std::size_t samples_used = 0;

  double operator()(double x) const;
};
using FlowProfileFit = PolynomialFit;

/// Least-squares polynomial; throws DataError when underdetermined.
PolynomialFit fit_polynomial(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int order);

/// Speed against mean_z over the records whose mean_z lies in [fit_min, fit_max].
FlowProfileFit fit_flow_profile(const std::vector<TrajectoryRecord>& records, int order, double fit_min,
                                double fit_max);

/// Extreme value of a quadratic fit (the centre-line speed of a parabola).
double parabola_peak(const PolynomialFit& fit);

struct ProfileBin {
  double z_center = 0.0;
  double mean_speed = 0.0;
  std::size_t count = 0;
};

/// Fixed-width bins of mean_z starting at a multiple of bin_width.
std::vector<ProfileBin> bin_profile(const std::vector<TrajectoryRecord>& records, double bin_width);

struct SineFit {
  double amplitude = 0.0;
  double period = 0.0;
  double phase = 0.0;
  double offset = 0.0;
  double r_squared = 0.0;
  bool converged = false;

  double operator()(double t) const;
};

/// y ~ offset + amplitude * sin(2 pi t / period + phase). A non-positive
/// period_guess starts from the strongest spectral line.
SineFit fit_sinusoid(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double period_guess = 0.0);

/// Reads every track_*.csv (frame,x_px,y_px,z_um,score) in a directory.
std::vector<RawTrajectory> read_track_dir(const std::filesystem::path& dir);

}  // namespace holotrack
