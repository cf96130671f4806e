#pragma once

#include "holotrack/frame_io.hpp"
#include "holotrack/holo.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace holotrack {

enum class MotionKind { Static, Linear, Sinusoid, Poiseuille };

/// Displacement of a particle as a function of frame index.
struct Motion {
  MotionKind kind = MotionKind::Static;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // Linear: um per frame
  int axis = 0;                                         // Sinusoid / Poiseuille: 0 = x, 1 = y
  double amplitude_um = 0.0;                            // Sinusoid
  double period_frames = 1.0;                           // Sinusoid
  double phase = 0.0;                                   // Sinusoid, radians
  double v_max = 0.0;                                   // Poiseuille: um/s
  double channel_height = 100.0;                        // Poiseuille: um
  double frame_rate = 200.0;                            // Poiseuille: Hz

  /// Offset from the base position at frame t (um).
  Eigen::Vector3d displacement(double t, double z0) const;
};

struct ParticleSpec {
  double x = 0.0;  // um from the centre of pixel (0, 0)
  double y = 0.0;
  double z = 50.0;       // um below the sensor plane
  double radius = 0.3;   // um
  double amplitude = 0.0;  // disc transmission magnitude; 0 = opaque
  double phase = 0.0;      // disc transmission phase, radians
  Motion motion;
};

struct SceneSpec {
  std::vector<ParticleSpec> particles;
  OpticalConfig optics;
  int width = 256;
  int height = 256;
  double noise_sigma = 0.0;
  double exposure = 0.5;  // intensity of the unscattered background
  int frames = 1;
  int guard = -1;  // padding around the frame on the simulation grid; -1 = auto
  std::uint64_t seed = 1;

  void validate() const;
};

struct GroundTruthRow {
  int frame = 0;
  int particle_id = 0;
  double x_px = 0.0;
  double y_px = 0.0;
  double z_um = 0.0;
};

/// Complex field at the sensor for the particles at their frame-t positions,
/// on the padded simulation grid (frame pixel (0, 0) at (guard, guard)).
ComplexImage scatter_field(const SceneSpec& spec, int t);

/// Frame t of the scene; noise uses a stream derived from (seed, t).
Frame render_frame(const SceneSpec& spec, int t);

/// Single hologram of the particles at their base positions.
Frame synth_hologram(const SceneSpec& spec);

struct SynthVideo {
  std::vector<Frame> frames;
  std::vector<GroundTruthRow> truth;
};

/// Positions of every particle at frame t, in frame pixels (z in um).
std::vector<GroundTruthRow> ground_truth(const SceneSpec& spec, int t);

SynthVideo synth_motion_video(const SceneSpec& spec);

/// Side of the square simulation grid.
int simulation_grid_size(const SceneSpec& spec);

/// Parses a scene description: `key = value` lines plus repeated
/// `particle = x y z radius [amplitude [phase]] [motion ...]` entries where
/// motion is `linear vx vy vz`, `sinusoid axis amplitude period [phase]` or
/// `poiseuille axis v_max height frame_rate`.
SceneSpec parse_scene(std::istream& in);
SceneSpec load_scene(const std::filesystem::path& path);

/// Writes frame_NNNNN.pgm files and ground_truth.csv into dir.
void write_video(const SynthVideo& video, const std::filesystem::path& dir);
void write_ground_truth(const std::vector<GroundTruthRow>& rows, const std::filesystem::path& path);

}  // namespace holotrack
