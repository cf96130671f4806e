#include "holotrack/synth.hpp"

#include "holotrack/errors.hpp"
#include "holotrack/image_io.hpp"
#include "holotrack/rng.hpp"
#include "holotrack/text.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace holotrack {

Eigen::Vector3d Motion::displacement(double t, double z0) const {
  Eigen::Vector3d d = Eigen::Vector3d::Zero();
  switch (kind) {
    case MotionKind::Static:
      break;
    case MotionKind::Linear:
      d = velocity * t;
      break;
    case MotionKind::Sinusoid:
      d[axis] = amplitude_um * std::sin(2.0 * std::numbers::pi * t / period_frames + phase);
      break;
    case MotionKind::Poiseuille: {
      const double s = z0 / channel_height;
      d[axis] = 4.0 * v_max * s * (1.0 - s) * t / frame_rate;
      break;
    }
  }
  return d;
}

void SceneSpec::validate() const {
  optics.validate();
  if (width < 8 || height < 8) throw ConfigError("scene frame must be at least 8x8");
  if (!(noise_sigma >= 0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(exposure > 0)) throw ConfigError("exposure must be > 0");
  if (frames < 1) throw ConfigError("frames must be >= 1");
  for (const ParticleSpec& p : particles) {
    if (!(p.radius > 0)) throw ConfigError("particle radius must be > 0");
    if (!(p.amplitude >= 0)) throw ConfigError("particle amplitude must be >= 0");
    const Motion& m = p.motion;
    if ((m.kind == MotionKind::Sinusoid || m.kind == MotionKind::Poiseuille) && (m.axis < 0 || m.axis > 1)) {
      throw ConfigError("motion axis must be 0 (x) or 1 (y)");
    }
    if (m.kind == MotionKind::Sinusoid && !(m.period_frames > 0)) throw ConfigError("sinusoid period must be > 0");
    if (m.kind == MotionKind::Poiseuille && (!(m.channel_height > 0) || !(m.frame_rate > 0))) {
      throw ConfigError("poiseuille height and frame_rate must be > 0");
    }
  }
}

int simulation_grid_size(const SceneSpec& spec) {
  const int side = std::max(spec.width, spec.height);
  const int guard = spec.guard >= 0 ? spec.guard : side / 2;
  return side + 2 * guard;
}

namespace {

int guard_of(const SceneSpec& spec) {
  return (simulation_grid_size(spec) - std::max(spec.width, spec.height)) / 2;
}

double pixel_um(const SceneSpec& spec) { return spec.optics.pixel_size * 1e-3; }

}  // namespace

std::vector<GroundTruthRow> ground_truth(const SceneSpec& spec, int t) {
  std::vector<GroundTruthRow> rows;
  const double p = pixel_um(spec);
  for (std::size_t i = 0; i < spec.particles.size(); ++i) {
    const ParticleSpec& s = spec.particles[i];
    const Eigen::Vector3d d = s.motion.displacement(t, s.z);
    rows.push_back({t, static_cast<int>(i), (s.x + d.x()) / p, (s.y + d.y()) / p, s.z + d.z()});
  }
  return rows;
}

ComplexImage scatter_field(const SceneSpec& spec, int t) {
  spec.validate();
  const int n = simulation_grid_size(spec);
  const int guard = guard_of(spec);
  const double p = pixel_um(spec);
  const double extent = n * p;
  const double lambda = spec.optics.effective_wavelength() * 1e-3;
  const double k = 2.0 * std::numbers::pi / lambda;
  const double area = p * p;

  using Mat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;
  Mat spectrum = Mat::Zero(n, n);  // (row = Q, col = P), column-major
  std::vector<std::complex<double>> ex(static_cast<std::size_t>(n)), ey(static_cast<std::size_t>(n));
  std::map<double, std::vector<double>> disc_cache;  // radius -> disc FT by P^2 + Q^2
  const long max_s = static_cast<long>(std::floor(std::pow(extent / lambda, 2.0)));

  for (const GroundTruthRow& g : ground_truth(spec, t)) {
    const ParticleSpec& s = spec.particles[static_cast<std::size_t>(g.particle_id)];
    const double gx = g.x_px + guard, gy = g.y_px + guard;
    if (gx < 0 || gy < 0 || gx > n - 1 || gy > n - 1) continue;
    const std::complex<double> contrast = std::polar(s.amplitude, s.phase) - 1.0;
    std::vector<double>& disc = disc_cache[s.radius];
    if (disc.empty()) {
      disc.resize(static_cast<std::size_t>(max_s + 1));
      const double a = s.radius;
      for (long q = 0; q <= max_s; ++q) {
        const double rho = std::sqrt(static_cast<double>(q)) / extent;
        disc[static_cast<std::size_t>(q)] =
            q == 0 ? std::numbers::pi * a * a : a * std::cyl_bessel_j(1.0, 2.0 * std::numbers::pi * a * rho) / rho;
      }
    }
    for (int i = 0; i < n; ++i) {
      const double f = static_cast<double>(frequency_index(i, n)) / n;
      ex[static_cast<std::size_t>(i)] = std::polar(1.0, -2.0 * std::numbers::pi * f * gx);
      ey[static_cast<std::size_t>(i)] = std::polar(1.0, -2.0 * std::numbers::pi * f * gy);
    }
    const double z = g.z_um;
    for (int c = 0; c < n; ++c) {
      const long pc = frequency_index(c, n);
      for (int r = 0; r < n; ++r) {
        const long qr = frequency_index(r, n);
        const long sq = pc * pc + qr * qr;
        if (sq > max_s) continue;
        const double rad = 1.0 - static_cast<double>(sq) * (lambda / extent) * (lambda / extent);
        if (rad < 0) continue;
        // Forward propagation to the sensor is the inverse of the reconstruction kernel.
        const std::complex<double> h = std::polar(1.0, z * k * std::sqrt(rad));
        spectrum(r, c) += contrast * (disc[static_cast<std::size_t>(sq)] / area) * ex[static_cast<std::size_t>(c)] *
                          ey[static_cast<std::size_t>(r)] * h;
      }
    }
  }
  Mat field(n, n);
  Eigen::FFT<double> fft;
  fft.impl().inv2(field.data(), spectrum.data(), n, n);
  ComplexImage out(n, n);
  const double norm = 1.0 / (static_cast<double>(n) * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) out(r, c) = 1.0 + field(r, c) * norm;
  }
  return out;
}

Frame render_frame(const SceneSpec& spec, int t) {
  const ComplexImage field = scatter_field(spec, t);
  const int guard = guard_of(spec);
  Image img(spec.height, spec.width);
  SplitMix64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(t)));
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double v = spec.exposure * std::norm(field(y + guard, x + guard));
      if (spec.noise_sigma > 0) v += spec.noise_sigma * rng.normal();
      img(y, x) = std::clamp(v, 0.0, 1.0);
    }
  }
  return Frame(std::move(img), t, spec.optics.pixel_size);
}

Frame synth_hologram(const SceneSpec& spec) {
  for (const GroundTruthRow& g : ground_truth(spec, 0)) {
    if (g.x_px < 0 || g.y_px < 0 || g.x_px > spec.width - 1 || g.y_px > spec.height - 1) {
      throw DataError("particle " + std::to_string(g.particle_id) + " outside frame");
    }
  }
  return render_frame(spec, 0);
}

SynthVideo synth_motion_video(const SceneSpec& spec) {
  SynthVideo v;
  for (int t = 0; t < spec.frames; ++t) {
    v.frames.push_back(render_frame(spec, t));
    for (const GroundTruthRow& g : ground_truth(spec, t)) {
      if (g.x_px >= 0 && g.y_px >= 0 && g.x_px <= spec.width - 1 && g.y_px <= spec.height - 1) v.truth.push_back(g);
    }
  }
  return v;
}

namespace {

ParticleSpec parse_particle(const std::string& value, int line) {
  const std::vector<std::string> tok = split_ws(value);
  const std::string where = "particle (line " + std::to_string(line) + ")";
  if (tok.size() < 4) throw ConfigError(where + ": expected x y z radius");
  ParticleSpec p;
  p.x = parse_double(tok[0], where);
  p.y = parse_double(tok[1], where);
  p.z = parse_double(tok[2], where);
  p.radius = parse_double(tok[3], where);
  std::size_t i = 4;
  auto is_word = [&](std::size_t k) { return k < tok.size() && std::isalpha(static_cast<unsigned char>(tok[k][0])); };
  if (i < tok.size() && !is_word(i)) p.amplitude = parse_double(tok[i++], where);
  if (i < tok.size() && !is_word(i)) p.phase = parse_double(tok[i++], where);
  if (i == tok.size()) return p;
  const std::string kind = tok[i++];
  const std::size_t rest = tok.size() - i;
  auto num = [&](std::size_t k) { return parse_double(tok[i + k], where); };
  Motion& m = p.motion;
  if (kind == "linear" && rest == 3) {
    m.kind = MotionKind::Linear;
    m.velocity = {num(0), num(1), num(2)};
  } else if (kind == "sinusoid" && (rest == 3 || rest == 4)) {
    m.kind = MotionKind::Sinusoid;
    m.axis = static_cast<int>(parse_int(tok[i], where));
    m.amplitude_um = num(1);
    m.period_frames = num(2);
    if (rest == 4) m.phase = num(3);
  } else if (kind == "poiseuille" && rest == 4) {
    m.kind = MotionKind::Poiseuille;
    m.axis = static_cast<int>(parse_int(tok[i], where));
    m.v_max = num(1);
    m.channel_height = num(2);
    m.frame_rate = num(3);
  } else {
    throw ConfigError(where + ": bad motion '" + kind + "'");
  }
  return p;
}

}  // namespace

SceneSpec parse_scene(std::istream& in) {
  SceneSpec s;
  for (const KeyValue& kv : read_key_values(in)) {
    const std::string& k = kv.key;
    const std::string& v = kv.value;
    if (k == "particle") s.particles.push_back(parse_particle(v, kv.line));
    else if (k == "width") s.width = static_cast<int>(parse_int(v, k));
    else if (k == "height") s.height = static_cast<int>(parse_int(v, k));
    else if (k == "frames") s.frames = static_cast<int>(parse_int(v, k));
    else if (k == "noise_sigma") s.noise_sigma = parse_double(v, k);
    else if (k == "exposure") s.exposure = parse_double(v, k);
    else if (k == "guard") s.guard = static_cast<int>(parse_int(v, k));
    else if (k == "seed") s.seed = static_cast<std::uint64_t>(parse_int(v, k));
    else if (k == "wavelength") s.optics.wavelength_vacuum = parse_double(v, k);
    else if (k == "refractive_index") s.optics.refractive_index = parse_double(v, k);
    else if (k == "conversion_factor") s.optics.pixel_size = parse_double(v, k);
    else throw ConfigError("unknown scene key '" + k + "'");
  }
  s.validate();
  return s;
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open scene file " + path.string());
  return parse_scene(f);
}

void write_ground_truth(const std::vector<GroundTruthRow>& rows, const std::filesystem::path& path) {
  std::string out = "frame,particle_id,x_px,y_px,z_um\n";
  for (const GroundTruthRow& r : rows) {
    out += std::to_string(r.frame) + "," + std::to_string(r.particle_id) + "," + format_double(r.x_px) + "," +
           format_double(r.y_px) + "," + format_double(r.z_um) + "\n";
  }
  write_text(path, out);
}

void write_video(const SynthVideo& video, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string());
  for (const Frame& f : video.frames) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d.pgm", f.index);
    write_pgm16(dir / name, f.intensities);
  }
  write_ground_truth(video.truth, dir / "ground_truth.csv");
}

}  // namespace holotrack
