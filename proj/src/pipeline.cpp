#include "holotrack/pipeline.hpp"

#include "holotrack/errors.hpp"
#include "holotrack/image_io.hpp"
#include "holotrack/plot.hpp"
#include "holotrack/text.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace holotrack {

namespace fs = std::filesystem;

FrameSource directory_source(const fs::path& dir, double pixel_size_nm) {
  auto seq = std::make_shared<ImageSequence>(dir, pixel_size_nm);
  return {seq->size(), [seq](std::size_t i) { return seq->load(i); }};
}

FrameSource scene_source(const SceneSpec& spec) {
  spec.validate();
  return {static_cast<std::size_t>(spec.frames), [spec](std::size_t i) { return render_frame(spec, static_cast<int>(i)); }};
}

FrameSource memory_source(const std::vector<Frame>& frames) {
  return {frames.size(), [&frames](std::size_t i) { return frames.at(i); }};
}

FramePreprocessor::FramePreprocessor(const FrameSource& source, const PreprocessConfig& config)
    : source_(source), config_(config) {
  config_.validate();
  if (source_.count == 0) throw DataError("no frames");
  if (config_.background != BackgroundMode::None) {
    model_.emplace(config_.background, config_.background_window);
    if (config_.background == BackgroundMode::Static) {
      for (std::size_t i = 0; i < source_.count && !model_->full(); ++i) model_->push(source_.load(i).intensities);
    }
  }
}

Frame FramePreprocessor::next() {
  if (done()) throw DataError("frame source exhausted");
  Frame f = source_.load(next_);
  f.index = static_cast<int>(next_);
  ++next_;
  if (model_) {
    if (model_->empty()) model_->push(f.intensities);
    f = normalize_with_background(f, *model_);
  }
  return preprocess(f, config_);
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <typename F>
auto stage(const char* name, int frame, F&& f) {
  const std::string where = "frame " + std::to_string(frame) + ", " + name + ": ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const std::exception& e) {
    throw DataError(where + e.what());
  }
}

}  // namespace

void refine_and_reconstruct(Track& t, const Frame& frame, const RunConfig& config, StageTimes* times) {
  if (!t.updated || !t.templ || t.history.empty()) return;
  TrackSample& s = t.history.back();
  const Template& tpl = *t.templ;
  Vec2 center(s.x, s.y);

  auto t0 = Clock::now();
  if (config.profile.xcorr) {
    const XcorrResult r = xcorr_refine(tpl, center);
    if ((r.center - tpl.center).norm() <= 0.25 * tpl.side()) center = r.center;
    s.x = center.x();
    s.y = center.y();
  }
  if (times) times->refine += since(t0);

  if (!config.reconstruction.enabled) return;
  t0 = Clock::now();
  OpticalConfig optics = config.optics;
  optics.pixel_size = frame.pixel_size;
  const ReconstructionParams& rp = config.reconstruction;
  if (rp.method == ReconstructionMethod::TwoD) {
    s.z = axial_scan_2d(tpl.pixels, center - tpl.origin(), config.scan, optics, rp.mask_radius, rp.margin_factor).z_star;
  } else {
    std::optional<double> heading;
    if (config.profile.mode == SamplingMode::Sector) {
      const Vec2 v = t.kalman.velocity();
      heading = std::atan2(v.y(), v.x());
    }
    const RadialProfile p = radial_profile(tpl, center, config.profile.mode, config.profile.delta_r,
                                           config.profile.delta_theta, heading);
    const RadialProfile ext = extend_profile(p, rp.margin_factor);
    s.z = axial_scan(ext, config.scan, optics, rp.mask_radius, rp.method == ReconstructionMethod::OneDDeconvolved).z_star;
  }
  if (times) times->reconstruct += since(t0);
}

TrackRunResult track_frames(const RunConfig& config, const FrameSource& source) {
  config.validate();
  const auto start = Clock::now();
  TrackRunResult result;
  FramePreprocessor prep(source, config.preprocess);
  Tracker tracker(config.track);
  FrameGeometry geometry;
  while (!prep.done()) {
    const int idx = static_cast<int>(result.frames);
    auto t0 = Clock::now();
    const Frame frame = stage("pre-processing", idx, [&] { return prep.next(); });
    geometry = frame.geometry;
    result.stages.preprocess += since(t0);

    t0 = Clock::now();
    const std::vector<Detection> dets = stage("detection", idx, [&] { return detect_particles(frame, config.detect); });
    result.stages.detect += since(t0);

    t0 = Clock::now();
    stage("tracking", idx, [&] {
      tracker.advance(dets, frame);
      return 0;
    });
    result.stages.track += since(t0);

    stage("reconstruction", idx, [&] {
      for (Track& t : tracker.tracks()) refine_and_reconstruct(t, frame, config, &result.stages);
      return 0;
    });
    ++result.frames;
  }
  result.tracks = tracker.tracks();
  for (Track& t : result.tracks) {
    t.templ.reset();
    for (TrackSample& s : t.history) {
      const Vec2 src = geometry.to_source({s.x, s.y});
      s.x = src.x();
      s.y = src.y();
    }
  }
  result.seconds = since(start);
  return result;
}

void write_track_outputs(const TrackRunResult& result, const RunConfig& config, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string());
  std::string summary = "track_id,n_samples,first_frame,last_frame\n";
  for (const Track& t : result.tracks) {
    if (t.history.empty()) continue;
    std::string csv = "frame,x_px,y_px,z_um,score\n";
    for (const TrackSample& s : t.history) {
      csv += std::to_string(s.frame) + "," + format_fixed(s.x, 4) + "," + format_fixed(s.y, 4) + "," +
             format_fixed(s.z, 3) + "," + format_fixed(s.score, 3) + "\n";
    }
    char name[32];
    std::snprintf(name, sizeof(name), "track_%04d.csv", t.id);
    write_text(dir / name, csv);
    summary += std::to_string(t.id) + "," + std::to_string(t.history.size()) + "," +
               std::to_string(t.history.front().frame) + "," + std::to_string(t.history.back().frame) + "\n";
  }
  write_text(dir / "summary.csv", summary);
  write_text(dir / "config.txt", serialize_config(config));
}

TrackRunResult run_track(const RunConfig& config, const fs::path& input_dir) {
  config.validate();
  const FrameSource src = directory_source(input_dir, config.optics.pixel_size);
  TrackRunResult r = track_frames(config, src);
  write_track_outputs(r, config, config.output_dir);
  return r;
}

namespace {

RgbImage edge_panel(const Mask& edges) {
  RgbImage img(static_cast<int>(edges.cols()), static_cast<int>(edges.rows()));
  for (Eigen::Index y = 0; y < edges.rows(); ++y) {
    for (Eigen::Index x = 0; x < edges.cols(); ++x) {
      if (edges(y, x)) img.set(static_cast<int>(x), static_cast<int>(y), 255, 255, 255);
    }
  }
  return img;
}

}  // namespace

std::vector<fs::path> run_preview(const RunConfig& config, const fs::path& input_dir, std::size_t frame_index,
                                  const std::vector<double>& canny_multiples) {
  config.validate();
  const FrameSource src = directory_source(input_dir, config.optics.pixel_size);
  if (frame_index >= src.count) {
    throw DataError("frame index " + std::to_string(frame_index) + " out of range (" + std::to_string(src.count) +
                    " frames)");
  }
  FramePreprocessor prep(src, config.preprocess);
  Frame frame;
  for (std::size_t i = 0; i <= frame_index; ++i) frame = prep.next();

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw DataError("cannot create output directory " + config.output_dir);
  std::vector<fs::path> out;
  const int w = static_cast<int>(frame.width()), h = static_cast<int>(frame.height());
  for (double m : canny_multiples) {
    if (!(m >= 0)) throw ConfigError("canny multiple must be >= 0");
    DetectParams p = config.detect;
    p.canny_multiple = m;
    const DetectionReport rep = detect_particles_report(frame, p);
    Canvas cv(3 * w, h, kBlack);
    const RgbImage grey = to_rgb(frame.intensities);
    cv.blit(grey, 0, 0);
    cv.blit(edge_panel(rep.levels.front().edges.binary), w, 0);
    cv.blit(grey, 2 * w, 0);
    for (const Detection& d : rep.detections) {
      cv.circle(2 * w + d.x, d.y, 8, kRed);
      cv.line(2 * w + d.x - 3, d.y, 2 * w + d.x + 3, d.y, kRed);
      cv.line(2 * w + d.x, d.y - 3, 2 * w + d.x, d.y + 3, kRed);
      cv.text(2 * w + static_cast<int>(d.x) + 10, static_cast<int>(d.y) - 12, format_fixed(d.score, 0), kGreen, 2);
    }
    const fs::path path =
        fs::path(config.output_dir) / ("preview_" + std::to_string(frame_index) + "_m" + format_double(m) + ".png");
    cv.save(path);
    out.push_back(path);
  }
  return out;
}

AxialReconstruction reconstruct_template(const Image& pixels, const Vec2& center, const RunConfig& config) {
  config.validate();
  const ReconstructionParams& rp = config.reconstruction;
  if (rp.method == ReconstructionMethod::TwoD) {
    return axial_scan_2d(pixels, center, config.scan, config.optics, rp.mask_radius, rp.margin_factor);
  }
  if (config.profile.mode == SamplingMode::Sector) throw ConfigError("sector sampling needs a track heading");
  const RadialProfile p = radial_profile(pixels, center, SamplingMode::Circular, config.profile.delta_r,
                                         config.profile.delta_theta);
  return axial_scan(extend_profile(p, rp.margin_factor), config.scan, config.optics, rp.mask_radius,
                    rp.method == ReconstructionMethod::OneDDeconvolved);
}

void write_curve_csv(const AxialReconstruction& rec, const fs::path& path) {
  std::string csv = "z_um,intensity\n";
  for (std::size_t i = 0; i < rec.z_values.size(); ++i) {
    csv += format_double(rec.z_values[i]) + "," + format_double(rec.intensities[i]) + "\n";
  }
  write_text(path, csv);
}

void plot_curve(const AxialReconstruction& rec, const fs::path& path) {
  Series s{rec.z_values, rec.intensities, kBlue, true, {}};
  Series peak{{rec.z_star}, {rec.intensities[argmax_first(rec.intensities)]}, kRed, false, {}};
  plot_series(path, {s, peak});
}

FlowRunResult run_flow(const RunConfig& config, const fs::path& track_dir, const fs::path& out_dir, bool plots) {
  config.validate();
  FlowRunResult r;
  r.records = analyze_trajectories(read_track_dir(track_dir), config.flow, config.optics.pixel_size);
  r.bins = bin_profile(r.records, config.flow.bin_width);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir.string());
  std::string profile = "z_bin,mean_speed,count\n";
  for (const ProfileBin& b : r.bins) {
    profile += format_double(b.z_center) + "," + format_double(b.mean_speed) + "," + std::to_string(b.count) + "\n";
  }
  write_text(out_dir / "profile.csv", profile);
  std::string traj = "track_id,mean_x,mean_y,mean_z,z_std,speed,step_speed\n";
  for (const TrajectoryRecord& t : r.records) {
    traj += std::to_string(t.track_id) + "," + format_double(t.mean_x) + "," + format_double(t.mean_y) + "," +
            format_double(t.mean_z) + "," + format_double(t.z_std) + "," + format_double(t.speed) + "," +
            format_double(t.step_speed) + "\n";
  }
  write_text(out_dir / "trajectories.csv", traj);

  r.fit = fit_flow_profile(r.records, config.fit_order, config.flow.fit_min, config.flow.fit_max);
  std::string fit = "order = " + std::to_string(r.fit.order) + "\ncoefficients =";
  for (Eigen::Index i = 0; i < r.fit.coefficients.size(); ++i) fit += " " + format_double(r.fit.coefficients[i]);
  fit += "\nr_squared = " + format_double(r.fit.r_squared) + "\nsamples_used = " + std::to_string(r.fit.samples_used) + "\n";
  if (r.fit.order == 2 && r.fit.coefficients[2] != 0.0) fit += "peak_speed = " + format_double(parabola_peak(r.fit)) + "\n";
  write_text(out_dir / "fit.txt", fit);

  if (plots && !r.records.empty()) {
    double vmax = 0.0;
    for (const TrajectoryRecord& t : r.records) vmax = std::max(vmax, t.speed);
    Series pts, xz, yz, oblique;
    for (const TrajectoryRecord& t : r.records) {
      const double c = vmax > 0 ? t.speed / vmax : 0.0;
      pts.x.push_back(t.mean_z);
      pts.y.push_back(t.speed);
      xz.x.push_back(t.mean_x);
      xz.y.push_back(t.mean_z);
      xz.value.push_back(c);
      yz.x.push_back(t.mean_y);
      yz.y.push_back(t.mean_z);
      yz.value.push_back(c);
      // Cabinet projection of (x, y, z) with z drawn upwards.
      const double um = config.optics.pixel_size * 1e-3;
      oblique.x.push_back(t.mean_x * um + 0.5 * t.mean_y * um * std::cos(0.6));
      oblique.y.push_back(t.mean_z + 0.5 * t.mean_y * um * std::sin(0.6));
      oblique.value.push_back(c);
    }
    Series curve{{}, {}, kRed, true, {}};
    const double z0 = config.flow.fit_min, z1 = config.flow.fit_max;
    for (int i = 0; i <= 100; ++i) {
      const double z = z0 + (z1 - z0) * i / 100.0;
      curve.x.push_back(z);
      curve.y.push_back(r.fit(z));
    }
    plot_series(out_dir / "speed_vs_z.png", {pts, curve});
    plot_series(out_dir / "scatter_3d.png", {oblique});
    plot_series(out_dir / "xz_view.png", {xz});
    plot_series(out_dir / "yz_view.png", {yz});
  }
  return r;
}

BenchResult run_bench(const RunConfig& base, int frames, int frame_size, int template_radius) {
  if (frames < 1) throw ConfigError("bench needs at least one frame");
  if (frame_size < 4 * template_radius) throw ConfigError("bench frame too small for the template radius");
  BenchResult b;
  b.frames = frames;
  b.frame_size = frame_size;
  b.template_radius = template_radius;

  RunConfig cfg = base;
  cfg.track.template_radius = template_radius;
  cfg.reconstruction.enabled = true;
  cfg.validate();

  SceneSpec scene;
  scene.optics = cfg.optics;
  scene.width = scene.height = frame_size;
  scene.frames = frames;
  scene.noise_sigma = 0.01;
  scene.seed = cfg.detect.seed;
  const double um = cfg.optics.pixel_size * 1e-3;
  const double lo = 1.5 * template_radius, hi = frame_size - 1.5 * template_radius;
  const double zs[] = {40.0, 50.0, 60.0, 70.0};
  for (int i = 0; i < 4; ++i) {
    ParticleSpec p;
    p.x = (i % 2 ? hi : lo) * um;
    p.y = (i / 2 ? hi : lo) * um;
    p.z = zs[i];
    p.motion.kind = MotionKind::Linear;
    p.motion.velocity = Eigen::Vector3d((i % 2 ? -1.0 : 1.0) * um, 0.5 * um, 0.0);
    scene.particles.push_back(p);
  }
  std::vector<Frame> rendered;
  for (int t = 0; t < frames; ++t) rendered.push_back(render_frame(scene, t));
  const TrackRunResult r = track_frames(cfg, memory_source(rendered));
  b.pipeline_fps = static_cast<double>(frames) / r.seconds;
  b.tracked_particles = r.tracks.size();

  SceneSpec single;
  single.optics = cfg.optics;
  single.width = single.height = 401;
  ParticleSpec centred;
  centred.x = centred.y = 200 * um;
  centred.z = 60.0;
  single.particles.push_back(centred);
  const Frame holo = synth_hologram(single);
  const Vec2 c(200.0, 200.0);
  const ReconstructionParams& rp = cfg.reconstruction;
  const int reps = 5;
  auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) {
    const RadialProfile p = radial_profile(holo.intensities, c, SamplingMode::Circular, cfg.profile.delta_r,
                                           cfg.profile.delta_theta);
    (void)axial_scan(extend_profile(p, rp.margin_factor), cfg.scan, cfg.optics, rp.mask_radius, false);
  }
  b.scan_1d_seconds = since(t0) / reps;
  t0 = Clock::now();
  (void)axial_scan_2d(holo.intensities, c, cfg.scan, cfg.optics, rp.mask_radius, rp.margin_factor);
  b.scan_2d_seconds = since(t0);
  b.scan_speedup = b.scan_2d_seconds / b.scan_1d_seconds;
  return b;
}

}  // namespace holotrack
