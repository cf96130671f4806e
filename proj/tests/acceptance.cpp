// Acceptance run: one PASS/FAIL line per criterion. argv[1] is the CLI binary.
#include "holotrack/detect.hpp"
#include "holotrack/errors.hpp"
#include "holotrack/pipeline.hpp"
#include "holotrack/text.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

using namespace holotrack;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) { return format_fixed(v, digits); }

std::string run_capture(const std::string& cmd, int* status) {
  std::string out;
  FILE* p = popen((cmd + " 2>&1").c_str(), "r");
  if (!p) throw DataError("cannot run " + cmd);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), p)) out.append(buf, n);
  const int rc = pclose(p);
  if (status) *status = rc;
  return out;
}

std::string run_ok(const std::string& cmd) {
  int rc = 0;
  std::string out = run_capture(cmd, &rc);
  if (rc != 0) throw DataError("command failed (" + std::to_string(rc) + "): " + cmd + "\n" + out);
  return out;
}

double field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (const KeyValue& kv : read_key_values(in)) {
    if (kv.key == key) return parse_double(kv.value, key);
  }
  throw DataError("missing '" + key + "' in output:\n" + text);
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) m[fs::relative(e.path(), dir).string()] = testutil::slurp(e.path());
  }
  return m;
}

double px_um(const OpticalConfig& o) { return o.pixel_size * 1e-3; }

// ---------------------------------------------------------------------------

Outcome axial_linearity() {
  RunConfig c;
  c.track.template_radius = 300;
  c.track.max_tracks = 1;
  c.scan = ZScan{10.0, 0.5, 160.0};
  const int side = 640;

  std::vector<double> truth, found;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double z = 40.0 + 10.0 * k;
    const Frame f = testutil::hologram_px(side, {{side / 2 + 0.3, side / 2 - 0.2, z, 0.3}});
    const TrackRunResult r = track_frames(c, memory_source({f}));
    if (r.tracks.empty() || r.tracks[0].history.empty()) return {false, "no track at z = " + fmt(z, 1)};
    const double zs = r.tracks[0].history[0].z;
    truth.push_back(z);
    found.push_back(zs);
    worst = std::max(worst, std::abs(zs - z));
  }
  const PolynomialFit fit = fit_polynomial(Eigen::Map<Eigen::VectorXd>(truth.data(), 10),
                                           Eigen::Map<Eigen::VectorXd>(found.data(), 10), 1);
  const double slope = fit.coefficients[1];
  const bool ok = std::abs(slope - 1.0) <= 0.02 && fit.r_squared >= 0.99 && worst <= c.scan.z_step + 1e-9;
  return {ok, "slope=" + fmt(slope) + " R2=" + fmt(fit.r_squared, 6) + " max|z*-z|=" + fmt(worst, 2) + " um"};
}

Outcome sinusoid_tracking() {
  SceneSpec s = testutil::scene_px(256, {{128.0, 128.0, 50.0, 1.0}}, 0.01, 7);
  s.frames = 2000;
  Motion& m = s.particles[0].motion;
  m.kind = MotionKind::Sinusoid;
  m.axis = 0;
  m.amplitude_um = 0.25;
  m.period_frames = 400.0;

  RunConfig c;
  c.reconstruction.enabled = false;
  c.track.template_radius = 60;
  c.track.max_tracks = 1;
  const TrackRunResult r = track_frames(c, scene_source(s));
  const Track* best = nullptr;
  for (const Track& t : r.tracks) {
    if (!best || t.history.size() > best->history.size()) best = &t;
  }
  if (!best || best->history.size() < 10) return {false, "no usable track"};
  const auto n = static_cast<Eigen::Index>(best->history.size());
  Eigen::VectorXd t(n), x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t[i] = best->history[static_cast<std::size_t>(i)].frame;
    x[i] = best->history[static_cast<std::size_t>(i)].x;
  }
  const SineFit fit = fit_sinusoid(t, x);
  const double a0 = m.amplitude_um / px_um(s.optics);
  const double ea = std::abs(std::abs(fit.amplitude) - a0) / a0;
  const double ep = std::abs(fit.period - m.period_frames) / m.period_frames;
  const bool ok = ea <= 0.01 && ep <= 0.01 && fit.r_squared >= 0.98 && r.seconds < 300.0;
  return {ok, "samples=" + std::to_string(n) + " amplitude=" + fmt(std::abs(fit.amplitude)) + " px (truth " + fmt(a0) +
                  ", " + fmt(100 * ea, 2) + "%) period=" + fmt(fit.period, 2) + " (" + fmt(100 * ep, 2) +
                  "%) R2=" + fmt(fit.r_squared, 5) + " pipeline " + fmt(r.seconds, 1) + " s"};
}

Outcome poiseuille_profile() {
  const double v_max = 1050.0, height = 100.0, rate = 200.0;
  RunConfig c;
  c.track.template_radius = 100;
  c.scan = ZScan{1.0, 0.5, 70.0};
  c.flow.frame_rate = rate;
  c.fit_order = 2;
  const fs::path root = testutil::scratch_dir("acceptance_flow");
  const fs::path merged = root / "tracks";
  fs::create_directories(merged);

  SplitMix64 rng(2024);
  const double p = 0.132;
  int written = 0;
  for (int v = 0; v < 20; ++v) {
    SceneSpec s;
    s.width = s.height = 512;
    s.frames = 14;
    s.noise_sigma = 0.01;
    s.seed = 100 + static_cast<std::uint64_t>(v);
    for (double y : {128.0, 384.0}) {
      ParticleSpec q;
      q.x = 110.0 * p;
      q.y = y * p;
      q.z = 5.0 + 50.0 * rng.uniform();
      q.motion.kind = MotionKind::Poiseuille;
      q.motion.axis = 0;
      q.motion.v_max = v_max;
      q.motion.channel_height = height;
      q.motion.frame_rate = rate;
      s.particles.push_back(q);
    }
    const TrackRunResult r = track_frames(c, scene_source(s));
    const fs::path dir = root / ("video_" + std::to_string(v));
    write_track_outputs(r, c, dir);
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().filename().string().rfind("track_", 0) != 0) continue;
      char name[32];
      std::snprintf(name, sizeof(name), "track_%04d.csv", ++written);
      fs::copy_file(e.path(), merged / name);
    }
  }
  const FlowRunResult f = run_flow(c, merged, root / "flow", true);
  if (f.fit.order != 2 || f.fit.coefficients.size() != 3) return {false, "no quadratic fit"};
  const double peak = parabola_peak(f.fit);
  const double err = std::abs(peak - v_max) / v_max;
  const bool ok = f.fit.r_squared >= 0.93 && err <= 0.10;
  return {ok, "trajectories=" + std::to_string(f.records.size()) + " R2=" + fmt(f.fit.r_squared) +
                  " v_max=" + fmt(peak, 1) + " um/s (" + fmt(100 * err, 2) + "%)"};
}

Outcome bench(const std::string& cli) {
  const std::string out = run_ok(cli + " bench --frames 20");
  const double fps = field(out, "pipeline_fps");
  const double speedup = field(out, "scan_speedup");
  return {fps >= 5.0 && speedup >= 10.0, "pipeline_fps=" + fmt(fps, 2) + " scan_speedup=" + fmt(speedup, 1)};
}

Outcome oracle_suite() {
  int otsu_bad = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Image img = testutil::random_image(16, 16, seed);
    if (otsu_threshold(img).bin != oracle::otsu_brute_force(img)) ++otsu_bad;
  }

  int hung_bad = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    SplitMix64 rng(seed);
    const auto nt = static_cast<Eigen::Index>(rng.below(7));
    const auto nd = static_cast<Eigen::Index>(rng.below(7));
    Eigen::MatrixXd cost(nt, nd);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = 100.0 * rng.uniform();
    const double cna = 10.0 + 150.0 * rng.uniform();
    if (std::abs(hungarian_assign(cost, cna).total_cost - oracle::matching_brute_force(cost, cna)) > 1e-9) ++hung_bad;
  }

  double round_trip = 0.0, energy = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    OpticalConfig o;
    o.pixel_size = 100.0 + 5.0 * static_cast<double>(seed);
    const ComplexImage f = oracle::band_limited_2d(64 + 8 * static_cast<int>(seed), o, seed);
    const double z = 5.0 + 12.0 * static_cast<double>(seed);
    const ComplexImage g = propagate_2d(f, z, o);
    round_trip = std::max(round_trip, oracle::rel_err(propagate_2d(g, -z, o), f));
    energy = std::max(energy, std::abs(g.abs2().sum() / f.abs2().sum() - 1.0));
  }

  double agree = 0.0;
  const ZScan base;
  for (int k = 0; k < 20; ++k) {
    const double z = 20.0 + 5.5 * k + 0.13 * (k % 3);
    const Frame f = testutil::hologram_px(640, {{320.0, 320.0, z, 0.3}});
    const auto t = extract_template(f, {320.0, 320.0}, 300, true);
    if (!t) return {false, "template rejected"};
    const ZScan scan{std::round(z) - 8.0, base.z_step, std::round(z) + 8.0};
    const RadialProfile prof = radial_profile(*t, {320.0, 320.0}, SamplingMode::Circular, 0.5, 2 * std::numbers::pi / 64);
    const double one = axial_scan(extend_profile(prof, 2.0), scan, OpticalConfig{}, 1.0, false).z_star;
    const double two = axial_scan_2d(t->pixels, t->local_center(), scan, OpticalConfig{}, 1.0, 2.0).z_star;
    agree = std::max(agree, std::abs(one - two));
  }

  const bool ok = otsu_bad == 0 && hung_bad == 0 && round_trip <= 1e-8 && energy <= 1e-9 && agree <= base.z_step + 1e-9;
  std::ostringstream d;
  d << "otsu mismatches=" << otsu_bad << "/1000 hungarian mismatches=" << hung_bad << "/1000 round_trip=" << round_trip
    << " energy=" << energy << " max|z1D-z2D|=" << fmt(agree, 2) << " um";
  return {ok, d.str()};
}

Outcome overlapping_detection() {
  const int side = 384;
  const double z = 50.0, radius = 1.0, sigma = 0.05;
  const double c0 = side / 2.0;

  // Fringe extent: farthest pixel whose noiseless deviation from the background exceeds the noise level.
  const SceneSpec single = testutil::scene_px(side, {{c0, c0, z, radius}});
  const Frame clean = synth_hologram(single);
  double extent = 0.0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      if (std::abs(clean.intensities(y, x) - single.exposure) > sigma) extent = std::max(extent, std::hypot(x - c0, y - c0));

  DetectParams dp;
  dp.canny_sigma = 3.0;
  int frames = 0, found_all = 0;
  double worst = 0.0;
  for (double overlap : {0.0, 0.2, 0.4}) {
    const double sep = 2.0 * extent * (1.0 - overlap);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      SplitMix64 rng(seed + 1000);
      const double th = 2.0 * std::numbers::pi * rng.uniform();
      const double cx = c0 + rng.uniform() - 0.5, cy = c0 + rng.uniform() - 0.5;
      const double dx = 0.5 * sep * std::cos(th), dy = 0.5 * sep * std::sin(th);
      const std::vector<testutil::Spot> spots{{cx + dx, cy + dy, z, radius}, {cx - dx, cy - dy, z, radius}};
      const Frame f = preprocess(testutil::hologram_px(side, spots, sigma, seed + 1), PreprocessConfig{});
      const std::vector<Detection> d = detect_particles(f, dp);
      bool all = true;
      for (const testutil::Spot& s : spots) {
        double best = std::numeric_limits<double>::infinity();
        for (const Detection& e : d) best = std::min(best, std::hypot(e.x - s.x_px, e.y - s.y_px));
        worst = std::max(worst, best);
        all = all && best <= 2.0;
      }
      ++frames;
      found_all += all ? 1 : 0;
    }
  }
  return {found_all == frames, "fringe extent=" + fmt(extent, 1) + " px, frames with both found=" +
                                   std::to_string(found_all) + "/" + std::to_string(frames) +
                                   " worst error=" + fmt(worst, 2) + " px"};
}

Outcome determinism(const std::string& cli) {
  const fs::path root = testutil::scratch_dir("acceptance_determinism");
  write_text(root / "scene.txt",
             "width = 256\nheight = 256\nframes = 8\nnoise_sigma = 0.02\nseed = 11\n"
             "particle = 9.0 10.5 40 1.0 0 0 linear 0.35 0.0 0\n"
             "particle = 23.0 12.0 55 1.0 0 0 linear 0.5 0.05 0\n"
             "particle = 16.0 25.0 48 1.0 0 0 sinusoid 1 0.3 6\n");
  const std::string q = "\"";
  std::map<std::string, std::string> runs[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path run = root / ("run" + std::to_string(i));
    const fs::path frames = run / "frames";
    const fs::path tracks = run / "tracks";
    run_ok(cli + " synth " + q + (root / "scene.txt").string() + q + " -o " + q + frames.string() + q);
    run_ok(cli + " track -i " + q + frames.string() + q + " -o " + q + (root / "out").string() + q +
           " --set template_size=60 --set initial_step=30 --set last_step=70 --set minimum_track_size=3" +
           " --set fit_order=1");
    fs::rename(root / "out", tracks);
    run_ok(cli + " flow -c " + q + (tracks / "config.txt").string() + q + " -i " + q + tracks.string() + q + " -o " + q +
           (run / "flow").string() + q);
    run_ok(cli + " preview-edges -i " + q + frames.string() + q + " -f 3 -o " + q + (run / "preview").string() + q);
    runs[i] = snapshot(run);
  }
  std::size_t tracks = 0;
  for (const auto& [name, _] : runs[0]) tracks += name.rfind("tracks/track_", 0) == 0 ? 1 : 0;
  std::string diff;
  for (const auto& [name, bytes] : runs[0]) {
    const auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) diff += " " + name;
  }
  if (runs[0].size() != runs[1].size()) diff += " (file sets differ)";
  const bool ok = diff.empty() && tracks >= 3;
  return {ok, std::to_string(runs[0].size()) + " files, " + std::to_string(tracks) + " track files, " +
                  (diff.empty() ? std::string("all byte-identical") : "differ:" + diff)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path to holotrack CLI>\n";
    return 2;
  }
  const std::string cli = std::string("\"") + argv[1] + "\"";

  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "axial linearity", 120.0, axial_linearity},
      {2, "sinusoid tracking accuracy", 300.0, sinusoid_tracking},
      {3, "Poiseuille flow profile", 600.0, poiseuille_profile},
      {4, "throughput and 1D/2D scan speed", 0.0, [&] { return bench(cli); }},
      {5, "oracle equivalence suite", 0.0, oracle_suite},
      {6, "overlapping detection under noise", 0.0, overlapping_detection},
      {7, "byte-identical repeated runs", 0.0, [&] { return determinism(cli); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (c.limit_s > 0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += " (over the " + fmt(c.limit_s, 0) + " s limit)";
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
              << fmt(secs, 1) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
