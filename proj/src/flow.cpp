#include "holotrack/flow.hpp"

#include "holotrack/errors.hpp"
#include "holotrack/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

namespace holotrack {

void FlowFilter::validate() const {
  if (!(min_travel >= 0)) throw ConfigError("minimum_travel_distance must be >= 0");
  if (min_track_size < 2) throw ConfigError("minimum_track_size must be >= 2");
  if (!(max_axial_std > 0)) throw ConfigError("axial_standard_deviation must be > 0");
  if (!(frame_rate > 0)) throw ConfigError("frame_rate must be > 0");
  if (!(z_max > z_min)) throw ConfigError("z range must be ordered");
  if (!(fit_max > fit_min)) throw ConfigError("fit range must be ordered");
  if (!(bin_width > 0)) throw ConfigError("bin width must be > 0");
}

TrajectoryRecord summarize_trajectory(const RawTrajectory& t, double frame_rate, double conversion_nm_per_px) {
  if (!(frame_rate > 0)) throw ConfigError("frame_rate must be > 0");
  TrajectoryRecord r;
  r.track_id = t.track_id;
  r.samples = t.samples;
  const std::size_t n = t.samples.size();
  if (n == 0) return r;
  double sx = 0, sy = 0, sz = 0, szz = 0;
  std::size_t nz = 0;
  for (const TrajectorySample& s : t.samples) {
    sx += s.x;
    sy += s.y;
    if (std::isfinite(s.z)) {
      sz += s.z;
      ++nz;
    }
  }
  r.mean_x = sx / static_cast<double>(n);
  r.mean_y = sy / static_cast<double>(n);
  if (nz > 0) {
    r.mean_z = sz / static_cast<double>(nz);
    for (const TrajectorySample& s : t.samples) {
      if (std::isfinite(s.z)) szz += (s.z - r.mean_z) * (s.z - r.mean_z);
    }
    r.z_std = std::sqrt(szz / static_cast<double>(nz));
  }
  if (n >= 2) {
    const TrajectorySample& a = t.samples.front();
    const TrajectorySample& b = t.samples.back();
    r.travel = std::hypot(b.x - a.x, b.y - a.y);
    const double um = conversion_nm_per_px * 1e-3;
    const double dt = static_cast<double>(b.frame - a.frame) / frame_rate;
    r.speed = dt > 0 ? r.travel * um / dt : 0.0;
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const TrajectorySample& p = t.samples[i - 1];
      const TrajectorySample& q = t.samples[i];
      const double step_dt = static_cast<double>(q.frame - p.frame) / frame_rate;
      if (step_dt > 0) acc += std::hypot(q.x - p.x, q.y - p.y) * um / step_dt;
    }
    r.step_speed = acc / static_cast<double>(n - 1);
  }
  return r;
}

std::vector<TrajectoryRecord> analyze_trajectories(const std::vector<RawTrajectory>& tracks, const FlowFilter& filter,
                                                   double conversion_nm_per_px) {
  filter.validate();
  std::vector<TrajectoryRecord> out;
  for (const RawTrajectory& t : tracks) {
    if (static_cast<int>(t.samples.size()) < filter.min_track_size) continue;
    TrajectoryRecord r = summarize_trajectory(t, filter.frame_rate, conversion_nm_per_px);
    if (r.travel < filter.min_travel) continue;
    if (!(r.z_std <= filter.max_axial_std)) continue;
    if (!(r.mean_z >= filter.z_min && r.mean_z <= filter.z_max)) continue;
    out.push_back(std::move(r));
  }
  return out;
}

double PolynomialFit::operator()(double x) const {
  double v = 0.0;
  for (Eigen::Index i = coefficients.size() - 1; i >= 0; --i) v = v * x + coefficients[i];
  return v;
}

PolynomialFit fit_polynomial(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int order) {
  if (order < 0) throw ConfigError("polynomial order must be >= 0");
  if (x.size() != y.size()) throw DataError("fit inputs differ in length");
  const Eigen::Index n = x.size();
  if (n < order + 1) {
    throw DataError("underdetermined fit: " + std::to_string(n) + " points for order " + std::to_string(order));
  }
  Eigen::MatrixXd v(n, order + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (int k = 0; k <= order; ++k) {
      v(i, k) = p;
      p *= x[i];
    }
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  if (qr.rank() < order + 1) throw DataError("degenerate fit: too few distinct abscissae");
  PolynomialFit f;
  f.order = order;
  f.coefficients = qr.solve(y);
  f.samples_used = static_cast<std::size_t>(n);
  const double ss_res = (v * f.coefficients - y).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  f.r_squared = ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return f;
}

FlowProfileFit fit_flow_profile(const std::vector<TrajectoryRecord>& records, int order, double fit_min,
                                double fit_max) {
  std::vector<double> zs, vs;
  for (const TrajectoryRecord& r : records) {
    if (r.mean_z >= fit_min && r.mean_z <= fit_max) {
      zs.push_back(r.mean_z);
      vs.push_back(r.speed);
    }
  }
  return fit_polynomial(Eigen::Map<Eigen::VectorXd>(zs.data(), static_cast<Eigen::Index>(zs.size())),
                        Eigen::Map<Eigen::VectorXd>(vs.data(), static_cast<Eigen::Index>(vs.size())), order);
}

double parabola_peak(const PolynomialFit& fit) {
  if (fit.order != 2 || fit.coefficients.size() != 3 || fit.coefficients[2] == 0.0) {
    throw DataError("parabola peak needs a non-degenerate quadratic fit");
  }
  const Eigen::VectorXd& c = fit.coefficients;
  return c[0] - c[1] * c[1] / (4.0 * c[2]);
}

std::vector<ProfileBin> bin_profile(const std::vector<TrajectoryRecord>& records, double bin_width) {
  if (!(bin_width > 0)) throw ConfigError("bin width must be > 0");
  std::map<long, std::pair<double, std::size_t>> bins;
  for (const TrajectoryRecord& r : records) {
    if (!std::isfinite(r.mean_z)) continue;
    auto& b = bins[static_cast<long>(std::floor(r.mean_z / bin_width))];
    b.first += r.speed;
    ++b.second;
  }
  std::vector<ProfileBin> out;
  for (const auto& [k, b] : bins) {
    out.push_back({(static_cast<double>(k) + 0.5) * bin_width, b.first / static_cast<double>(b.second), b.second});
  }
  return out;
}

double SineFit::operator()(double t) const {
  return offset + amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
}

namespace {

// Linear least squares of a*sin(wt) + b*cos(wt) + c; returns (a, b, c) and the residual.
std::pair<Eigen::Vector3d, double> fixed_frequency_fit(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double w) {
  Eigen::MatrixXd m(t.size(), 3);
  m.col(0) = (w * t.array()).sin().matrix();
  m.col(1) = (w * t.array()).cos().matrix();
  m.col(2).setOnes();
  const Eigen::Vector3d p = m.colPivHouseholderQr().solve(y);
  return {p, (m * p - y).squaredNorm()};
}

}  // namespace

SineFit fit_sinusoid(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double period_guess) {
  const Eigen::Index n = t.size();
  if (n != y.size()) throw DataError("fit inputs differ in length");
  if (n < 5) throw DataError("sine fit needs at least 5 samples");
  const double span = t.maxCoeff() - t.minCoeff();
  if (!(span > 0)) throw DataError("sine fit needs distinct sample times");
  const double two_pi = 2.0 * std::numbers::pi;

  double w0 = 0.0;
  if (period_guess > 0) {
    w0 = two_pi / period_guess;
  } else {
    // Coarse periodogram, then a finer grid around the best line.
    const Eigen::ArrayXd yc = y.array() - y.mean();
    auto power = [&](double w) {
      return std::pow((yc * (w * t.array()).sin()).sum(), 2) + std::pow((yc * (w * t.array()).cos()).sum(), 2);
    };
    double best = -1.0;
    const long kmax = std::max<long>(2, static_cast<long>(n / 2));
    for (long k = 1; k <= kmax; ++k) {
      const double w = two_pi * static_cast<double>(k) / span;
      if (const double p = power(w); p > best) {
        best = p;
        w0 = w;
      }
    }
    const double dw = two_pi / span;
    for (int k = -50; k <= 50; ++k) {
      const double w = w0 + dw * k / 50.0;
      if (w <= 0) continue;
      if (const double p = power(w); p > best) {
        best = p;
        w0 = w;
      }
    }
  }

  auto [p, res] = fixed_frequency_fit(t, y, w0);
  Eigen::Vector4d theta(p[0], p[1], p[2], w0);
  double lambda = 1e-3;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const Eigen::ArrayXd s = (theta[3] * t.array()).sin(), c = (theta[3] * t.array()).cos();
    Eigen::MatrixXd jac(n, 4);
    jac.col(0) = s.matrix();
    jac.col(1) = c.matrix();
    jac.col(2).setOnes();
    jac.col(3) = (t.array() * (theta[0] * c - theta[1] * s)).matrix();
    const Eigen::VectorXd r = y - (theta[0] * s + theta[1] * c + theta[2]).matrix();
    Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d jtr = jac.transpose() * r;
    jtj.diagonal() *= 1.0 + lambda;
    const Eigen::Vector4d step = jtj.ldlt().solve(jtr);
    const Eigen::Vector4d cand = theta + step;
    const Eigen::ArrayXd s2 = (cand[3] * t.array()).sin(), c2 = (cand[3] * t.array()).cos();
    const double res2 = (y.array() - (cand[0] * s2 + cand[1] * c2 + cand[2])).square().sum();
    if (res2 <= res) {
      const bool small = std::abs(res - res2) <= 1e-14 * std::max(1.0, res) && step.norm() < 1e-10 * (1.0 + theta.norm());
      theta = cand;
      res = res2;
      lambda = std::max(lambda / 10.0, 1e-12);
      if (small || step.cwiseAbs().maxCoeff() < 1e-12 * (1.0 + theta.cwiseAbs().maxCoeff())) {
        converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) {
        converged = true;
        break;
      }
    }
  }

  SineFit f;
  double w = theta[3];
  double a = theta[0], b = theta[1];
  if (w < 0) {
    w = -w;
    a = -a;
  }
  f.amplitude = std::hypot(a, b);
  f.phase = std::atan2(b, a);
  f.period = two_pi / w;
  f.offset = theta[2];
  f.converged = converged;
  const double ss_tot = (y.array() - y.mean()).square().sum();
  f.r_squared = ss_tot > 0 ? std::clamp(1.0 - res / ss_tot, 0.0, 1.0) : 1.0;
  return f;
}

std::vector<RawTrajectory> read_track_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("missing directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("track_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RawTrajectory> out;
  for (const auto& path : files) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot read " + path.string());
    RawTrajectory t;
    const std::string stem = path.stem().string();
    try {
      t.track_id = static_cast<int>(parse_int(stem.substr(6), "track id"));
    } catch (const ConfigError&) {
      throw DataError("bad track file name " + path.string());
    }
    std::string line;
    std::getline(f, line);
    if (trim(line).rfind("frame,x_px,y_px,z_um", 0) != 0) throw DataError("unexpected header in " + path.string());
    while (std::getline(f, line)) {
      if (trim(line).empty()) continue;
      const std::vector<std::string> tok = split_ws(line);
      if (tok.size() < 4) throw DataError("short row in " + path.string());
      try {
        TrajectorySample s;
        s.frame = static_cast<int>(parse_int(tok[0], "frame"));
        s.x = parse_double(tok[1], "x_px");
        s.y = parse_double(tok[2], "y_px");
        s.z = tok[3] == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_double(tok[3], "z_um");
        t.samples.push_back(s);
      } catch (const ConfigError& e) {
        throw DataError(path.string() + ": " + e.what());
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace holotrack
