#pragma once

#include "holotrack/config.hpp"
#include "holotrack/synth.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

namespace holotrack {

/// Random-access frame supplier.
struct FrameSource {
  std::size_t count = 0;
  std::function<Frame(std::size_t)> load;
};

FrameSource directory_source(const std::filesystem::path& dir, double pixel_size_nm);
FrameSource scene_source(const SceneSpec& spec);
FrameSource memory_source(const std::vector<Frame>& frames);

/// Streams frames through the background model and the pre-processing chain.
class FramePreprocessor {
 public:
  FramePreprocessor(const FrameSource& source, const PreprocessConfig& config);
  Frame next();
  bool done() const { return next_ >= source_.count; }

 private:
  const FrameSource& source_;
  PreprocessConfig config_;
  std::optional<BackgroundModel> model_;
  std::size_t next_ = 0;
};

struct StageTimes {
  double preprocess = 0.0;
  double detect = 0.0;
  double track = 0.0;
  double refine = 0.0;
  double reconstruct = 0.0;
};

struct TrackRunResult {
  std::vector<Track> tracks;  // histories in source-frame pixels
  std::size_t frames = 0;
  double seconds = 0.0;
  StageTimes stages;
};

/// Per-track reconstruction of the latest sample: refines the centre, sets z.
void refine_and_reconstruct(Track& t, const Frame& frame, const RunConfig& config, StageTimes* times = nullptr);

/// Pre-processing, detection, tracking, refinement and reconstruction over
/// every frame. Errors are rethrown with the frame index and stage name.
TrackRunResult track_frames(const RunConfig& config, const FrameSource& source);

/// track_*.csv, summary.csv and config.txt in `dir`.
void write_track_outputs(const TrackRunResult& result, const RunConfig& config, const std::filesystem::path& dir);

/// track_frames on a directory, outputs to config.output_dir.
TrackRunResult run_track(const RunConfig& config, const std::filesystem::path& input_dir);

/// One PNG triptych per Canny multiple: frame | edges | detections.
std::vector<std::filesystem::path> run_preview(const RunConfig& config, const std::filesystem::path& input_dir,
                                               std::size_t frame_index, const std::vector<double>& canny_multiples);

/// Axial curve of a saved template image around `center` (template pixels).
AxialReconstruction reconstruct_template(const Image& pixels, const Vec2& center, const RunConfig& config);

/// Writes z_um,intensity rows.
void write_curve_csv(const AxialReconstruction& rec, const std::filesystem::path& path);
void plot_curve(const AxialReconstruction& rec, const std::filesystem::path& path);

struct FlowRunResult {
  std::vector<TrajectoryRecord> records;
  std::vector<ProfileBin> bins;
  FlowProfileFit fit;
};

/// Reads track CSVs, filters, bins and fits; writes profile.csv, fit.txt and plots.
FlowRunResult run_flow(const RunConfig& config, const std::filesystem::path& track_dir,
                       const std::filesystem::path& out_dir, bool plots);

struct BenchResult {
  int frames = 0;
  int frame_size = 0;
  int template_radius = 0;
  double pipeline_fps = 0.0;
  double scan_1d_seconds = 0.0;
  double scan_2d_seconds = 0.0;
  double scan_speedup = 0.0;
  std::size_t tracked_particles = 0;
};

/// Throughput on synthetic 1024 x 1024 frames with 201 x 201 templates and the
/// 1D against 2D scan on a 401 x 401 template.
BenchResult run_bench(const RunConfig& base, int frames, int frame_size = 1024, int template_radius = 100);

}  // namespace holotrack
