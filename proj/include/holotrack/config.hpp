#pragma once

#include "holotrack/detect.hpp"
#include "holotrack/flow.hpp"
#include "holotrack/frame_io.hpp"
#include "holotrack/holo.hpp"
#include "holotrack/refine.hpp"
#include "holotrack/track.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace holotrack {

enum class ReconstructionMethod { OneD, OneDDeconvolved, TwoD };

struct ReconstructionParams {
  bool enabled = true;
  ReconstructionMethod method = ReconstructionMethod::OneD;
  double margin_factor = 2.0;
  double mask_radius = 1.0;  // px

  void validate() const;
  bool operator==(const ReconstructionParams&) const = default;
};

/// Every tunable of a run. Keys follow the snake-cased GUI labels.
struct RunConfig {
  PreprocessConfig preprocess;
  DetectParams detect;
  TrackParams track;
  OpticalConfig optics;
  ZScan scan;
  ProfileParams profile;
  ReconstructionParams reconstruction;
  FlowFilter flow;
  int fit_order = 2;
  std::string output_dir = "out";

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Parses `key = value` text on top of the defaults. Unknown keys and
/// out-of-range values throw ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_string(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key, one per line, in a fixed order.
std::string serialize_config(const RunConfig& config);

std::string to_string(ReconstructionMethod m);
ReconstructionMethod parse_method(const std::string& s);

}  // namespace holotrack
