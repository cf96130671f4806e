#include "holotrack/config.hpp"
#include "holotrack/errors.hpp"
#include "holotrack/image_io.hpp"
#include "holotrack/pipeline.hpp"
#include "holotrack/synth.hpp"
#include "holotrack/text.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

using namespace holotrack;
namespace fs = std::filesystem;

namespace {

RunConfig build_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig base = path.empty() ? RunConfig{} : load_config(path);
  if (overrides.empty()) return base;
  std::string text = serialize_config(base);
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    const std::string key(trim(std::string_view(o).substr(0, eq)));
    const std::string value(trim(std::string_view(o).substr(eq + 1)));
    std::istringstream in(text);
    std::string line, out;
    bool found = false;
    while (std::getline(in, line)) {
      if (line.rfind(key + " = ", 0) == 0) {
        line = key + " = " + value;
        found = true;
      }
      out += line + "\n";
    }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
    text = out;
  }
  return parse_config_string(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Holographic particle tracking and 3D reconstruction"};
  app.require_subcommand(1);

  std::string config_path, input, output;
  std::vector<std::string> overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "configuration file (key = value)")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", overrides, "override a configuration key (key=value)");
  };

  auto* track = app.add_subcommand("track", "track particles in an image sequence");
  add_common(track);
  track->add_option("-i,--input", input, "directory of frames")->required();
  track->add_option("-o,--output", output, "output directory (overrides output_dir)");

  std::size_t frame_index = 0;
  std::vector<double> multiples{0.5, 1.0, 2.0};
  auto* preview = app.add_subcommand("preview-edges", "edge and detection previews for one frame");
  add_common(preview);
  preview->add_option("-i,--input", input, "directory of frames")->required();
  preview->add_option("-f,--frame", frame_index, "frame index");
  preview->add_option("-m,--multiples", multiples, "Canny multiples")->delimiter(',');
  preview->add_option("-o,--output", output, "output directory");

  std::vector<double> center;
  bool no_plot = false;
  auto* recon = app.add_subcommand("reconstruct", "axial intensity curve of a template image");
  add_common(recon);
  recon->add_option("-t,--template", input, "template image")->required()->check(CLI::ExistingFile);
  recon->add_option("--center", center, "particle centre x y in template pixels (default: image centre)")
      ->expected(2);
  recon->add_option("-o,--output", output, "output directory");
  recon->add_flag("--no-plot", no_plot, "skip the PNG plot");

  auto* flow = app.add_subcommand("flow", "flow profile from saved tracks");
  add_common(flow);
  flow->add_option("-i,--input", input, "directory of track_*.csv files")->required();
  flow->add_option("-o,--output", output, "output directory");
  flow->add_flag("--no-plot", no_plot, "skip PNG plots");

  std::string scene_path;
  auto* synth = app.add_subcommand("synth", "render a synthetic hologram sequence");
  synth->add_option("scene", scene_path, "scene description")->required()->check(CLI::ExistingFile);
  synth->add_option("-o,--output", output, "output directory")->required();

  int bench_frames = 20, bench_size = 1024, bench_radius = 100;
  auto* bench = app.add_subcommand("bench", "throughput and 1D/2D scan timing");
  add_common(bench);
  bench->add_option("--frames", bench_frames, "frames to process");
  bench->add_option("--size", bench_size, "frame side in pixels");
  bench->add_option("--template-radius", bench_radius, "template radius in pixels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      const SceneSpec scene = load_scene(scene_path);
      const SynthVideo v = synth_motion_video(scene);
      write_video(v, output);
      std::cout << "frames = " << v.frames.size() << "\nground_truth_rows = " << v.truth.size() << "\n";
      return 0;
    }
    RunConfig cfg = build_config(config_path, overrides);
    if (!output.empty()) cfg.output_dir = output;
    cfg.validate();

    if (*track) {
      const TrackRunResult r = run_track(cfg, input);
      std::size_t n = 0;
      for (const Track& t : r.tracks) n += t.history.empty() ? 0 : 1;
      std::cout << "frames = " << r.frames << "\ntracks = " << n << "\nseconds = " << format_fixed(r.seconds, 3)
                << "\noutput_dir = " << cfg.output_dir << "\n";
    } else if (*preview) {
      for (const fs::path& p : run_preview(cfg, input, frame_index, multiples)) std::cout << p.string() << "\n";
    } else if (*recon) {
      const Image img = read_image(input);
      const Vec2 c = center.size() == 2 ? Vec2(center[0], center[1])
                                        : Vec2(0.5 * static_cast<double>(img.cols() - 1), 0.5 * static_cast<double>(img.rows() - 1));
      const AxialReconstruction rec = reconstruct_template(img, c, cfg);
      std::error_code ec;
      fs::create_directories(cfg.output_dir, ec);
      write_curve_csv(rec, fs::path(cfg.output_dir) / "axial_curve.csv");
      if (!no_plot) plot_curve(rec, fs::path(cfg.output_dir) / "axial_curve.png");
      std::cout << "z_star_um = " << format_double(rec.z_star) << "\n";
    } else if (*flow) {
      const FlowRunResult r = run_flow(cfg, input, cfg.output_dir, !no_plot);
      std::cout << "trajectories = " << r.records.size() << "\nr_squared = " << format_double(r.fit.r_squared) << "\n";
    } else if (*bench) {
      const BenchResult b = run_bench(cfg, bench_frames, bench_size, bench_radius);
      std::cout << "frames = " << b.frames << "\nframe_size = " << b.frame_size
                << "\ntemplate_side = " << 2 * b.template_radius + 1 << "\npipeline_fps = " << format_fixed(b.pipeline_fps, 2)
                << "\ntracks = " << b.tracked_particles << "\nscan_1d_seconds = " << format_fixed(b.scan_1d_seconds, 5)
                << "\nscan_2d_seconds = " << format_fixed(b.scan_2d_seconds, 5)
                << "\nscan_speedup = " << format_fixed(b.scan_speedup, 1) << "\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
