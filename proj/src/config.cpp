#include "holotrack/config.hpp"

#include "holotrack/errors.hpp"
#include "holotrack/text.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace holotrack {

void ReconstructionParams::validate() const {
  if (!(margin_factor >= 1.0)) throw ConfigError("template_margins must be >= 1");
  if (!(mask_radius >= 0)) throw ConfigError("paraxial_mask_radius must be >= 0");
}

void RunConfig::validate() const {
  preprocess.validate();
  detect.validate();
  track.validate();
  optics.validate();
  scan.validate();
  profile.validate();
  reconstruction.validate();
  flow.validate();
  if (fit_order < 0 || fit_order > 6) throw ConfigError("fit_order must be in [0, 6]");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::string to_string(ReconstructionMethod m) {
  switch (m) {
    case ReconstructionMethod::OneD: return "1D";
    case ReconstructionMethod::OneDDeconvolved: return "1D_decov";
    case ReconstructionMethod::TwoD: return "2D";
  }
  return "1D";
}

ReconstructionMethod parse_method(const std::string& s) {
  if (s == "1D") return ReconstructionMethod::OneD;
  if (s == "1D_decov") return ReconstructionMethod::OneDDeconvolved;
  if (s == "2D") return ReconstructionMethod::TwoD;
  throw ConfigError("reconstruction_method must be 1D, 1D_decov or 2D, got '" + s + "'");
}

namespace {

struct Entry {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Entry real(std::string key, T RunConfig::*group, double T::*field) {
  return {key, [=](const RunConfig& c) { return format_double(c.*group.*field); },
          [=](RunConfig& c, const std::string& v) { c.*group.*field = parse_double(v, key); }};
}

template <typename T, typename I>
Entry integer(std::string key, T RunConfig::*group, I T::*field) {
  return {key, [=](const RunConfig& c) { return std::to_string(c.*group.*field); },
          [=](RunConfig& c, const std::string& v) { c.*group.*field = static_cast<I>(parse_int(v, key)); }};
}

template <typename T>
Entry boolean(std::string key, T RunConfig::*group, bool T::*field) {
  return {key, [=](const RunConfig& c) { return std::string(c.*group.*field ? "true" : "false"); },
          [=](RunConfig& c, const std::string& v) { c.*group.*field = parse_bool(v, key); }};
}

std::string background_name(BackgroundMode m) {
  switch (m) {
    case BackgroundMode::None: return "none";
    case BackgroundMode::Static: return "static";
    case BackgroundMode::MovingAverage: return "moving_average";
  }
  return "none";
}

const std::vector<Entry>& entries() {
  using R = RunConfig;
  static const std::vector<Entry> table = {
      // pre-processing
      {"roi",
       [](const R& c) {
         if (!c.preprocess.roi) return std::string("none");
         const Roi& r = *c.preprocess.roi;
         return std::to_string(r.x0) + " " + std::to_string(r.y0) + " " + std::to_string(r.width) + " " +
                std::to_string(r.height);
       },
       [](R& c, const std::string& v) {
         if (v == "none") {
           c.preprocess.roi.reset();
           return;
         }
         const auto t = split_ws(v);
         if (t.size() != 4) throw ConfigError("roi expects 'x0 y0 width height' or 'none'");
         c.preprocess.roi = Roi{static_cast<int>(parse_int(t[0], "roi")), static_cast<int>(parse_int(t[1], "roi")),
                                static_cast<int>(parse_int(t[2], "roi")), static_cast<int>(parse_int(t[3], "roi"))};
       }},
      integer("boundary_margin", &R::preprocess, &PreprocessConfig::boundary_margin),
      real("resize_factor", &R::preprocess, &PreprocessConfig::resize_factor),
      integer("gaussian_kernel_size", &R::preprocess, &PreprocessConfig::gaussian_kernel),
      boolean("normalized_intensity", &R::preprocess, &PreprocessConfig::normalize),
      {"background_mode", [](const R& c) { return background_name(c.preprocess.background); },
       [](R& c, const std::string& v) {
         if (v == "none") c.preprocess.background = BackgroundMode::None;
         else if (v == "static") c.preprocess.background = BackgroundMode::Static;
         else if (v == "moving_average") c.preprocess.background = BackgroundMode::MovingAverage;
         else throw ConfigError("background_mode must be none, static or moving_average");
       }},
      integer("background_frames", &R::preprocess, &PreprocessConfig::background_window),
      // particle localisation
      integer("number_of_scales", &R::detect, &DetectParams::num_scales),
      real("its_transform_threshold", &R::detect, &DetectParams::its_threshold),
      integer("minimum_segment_length", &R::detect, &DetectParams::min_segment_length),
      real("minimum_votes", &R::detect, &DetectParams::min_votes),
      real("iterations_multiple", &R::detect, &DetectParams::iterations_multiple),
      integer("mapping_kernel_radius", &R::detect, &DetectParams::mapping_kernel_radius),
      real("canny_multiple", &R::detect, &DetectParams::canny_multiple),
      real("canny_sigma", &R::detect, &DetectParams::canny_sigma),
      {"seed", [](const R& c) { return std::to_string(c.detect.seed); },
       [](R& c, const std::string& v) {
         const long long s = parse_int(v, "seed");
         if (s < 0) throw ConfigError("seed must be >= 0");
         c.detect.seed = static_cast<std::uint64_t>(s);
       }},
      // tracking
      real("cost_of_nonassignment", &R::track, &TrackParams::cost_non_assignment),
      real("maximum_travel_distance", &R::track, &TrackParams::max_travel),
      integer("number_of_tracks", &R::track, &TrackParams::max_tracks),
      integer("template_size", &R::track, &TrackParams::template_radius),
      boolean("boundary_requirement", &R::track, &TrackParams::boundary_required),
      integer("max_misses", &R::track, &TrackParams::max_misses),
      {"kalman_initial_position_variance", [](const R& c) { return format_double(c.track.kalman.initial_position_variance); },
       [](R& c, const std::string& v) { c.track.kalman.initial_position_variance = parse_double(v, "kalman_initial_position_variance"); }},
      {"kalman_initial_velocity_variance", [](const R& c) { return format_double(c.track.kalman.initial_velocity_variance); },
       [](R& c, const std::string& v) { c.track.kalman.initial_velocity_variance = parse_double(v, "kalman_initial_velocity_variance"); }},
      {"kalman_process_position_noise", [](const R& c) { return format_double(c.track.kalman.process_position_noise); },
       [](R& c, const std::string& v) { c.track.kalman.process_position_noise = parse_double(v, "kalman_process_position_noise"); }},
      {"kalman_process_velocity_noise", [](const R& c) { return format_double(c.track.kalman.process_velocity_noise); },
       [](R& c, const std::string& v) { c.track.kalman.process_velocity_noise = parse_double(v, "kalman_process_velocity_noise"); }},
      {"kalman_measurement_noise", [](const R& c) { return format_double(c.track.kalman.measurement_noise); },
       [](R& c, const std::string& v) { c.track.kalman.measurement_noise = parse_double(v, "kalman_measurement_noise"); }},
      // refinement
      {"sampling_mode", [](const R& c) { return std::string(c.profile.mode == SamplingMode::Circular ? "circular" : "sector"); },
       [](R& c, const std::string& v) {
         if (v == "circular") c.profile.mode = SamplingMode::Circular;
         else if (v == "sector") c.profile.mode = SamplingMode::Sector;
         else throw ConfigError("sampling_mode must be circular or sector");
       }},
      real("delta_r", &R::profile, &ProfileParams::delta_r),
      real("delta_theta", &R::profile, &ProfileParams::delta_theta),
      boolean("xcorr", &R::profile, &ProfileParams::xcorr),
      // numerical reconstruction
      boolean("reconstruction", &R::reconstruction, &ReconstructionParams::enabled),
      {"reconstruction_method", [](const R& c) { return to_string(c.reconstruction.method); },
       [](R& c, const std::string& v) { c.reconstruction.method = parse_method(v); }},
      real("template_margins", &R::reconstruction, &ReconstructionParams::margin_factor),
      real("paraxial_mask_radius", &R::reconstruction, &ReconstructionParams::mask_radius),
      real("wavelength", &R::optics, &OpticalConfig::wavelength_vacuum),
      real("refractive_index", &R::optics, &OpticalConfig::refractive_index),
      real("conversion_factor", &R::optics, &OpticalConfig::pixel_size),
      real("initial_step", &R::scan, &ZScan::z_start),
      real("step_size", &R::scan, &ZScan::z_step),
      real("last_step", &R::scan, &ZScan::z_end),
      // flow profile
      real("frame_rate", &R::flow, &FlowFilter::frame_rate),
      real("minimum_travel_distance", &R::flow, &FlowFilter::min_travel),
      integer("minimum_track_size", &R::flow, &FlowFilter::min_track_size),
      real("axial_standard_deviation", &R::flow, &FlowFilter::max_axial_std),
      real("z_min", &R::flow, &FlowFilter::z_min),
      real("z_max", &R::flow, &FlowFilter::z_max),
      real("fit_min", &R::flow, &FlowFilter::fit_min),
      real("fit_max", &R::flow, &FlowFilter::fit_max),
      real("fitting_bin_width", &R::flow, &FlowFilter::bin_width),
      {"fit_order", [](const R& c) { return std::to_string(c.fit_order); },
       [](R& c, const std::string& v) { c.fit_order = static_cast<int>(parse_int(v, "fit_order")); }},
      {"output_dir", [](const R& c) { return c.output_dir; }, [](R& c, const std::string& v) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::set<std::string> seen;
  for (const KeyValue& kv : read_key_values(in)) {
    const auto& table = entries();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return e.key == kv.key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + kv.key + "' (line " + std::to_string(kv.line) + ")");
    if (!seen.insert(kv.key).second) throw ConfigError("duplicate config key '" + kv.key + "'");
    it->set(c, kv.value);
  }
  c.validate();
  return c;
}

RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  return parse_config(f);
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const Entry& e : entries()) out += e.key + " = " + e.get(config) + "\n";
  return out;
}

}  // namespace holotrack
