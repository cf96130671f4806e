#pragma once

#include "holotrack/image.hpp"
#include "holotrack/rng.hpp"
#include "holotrack/synth.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace testutil {

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("holotrack_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline holotrack::Image random_image(Eigen::Index h, Eigen::Index w, std::uint64_t seed) {
  holotrack::SplitMix64 rng(seed);
  holotrack::Image img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
  return img;
}

struct Spot {
  double x_px;
  double y_px;
  double z_um = 50.0;
  double radius_um = 1.0;
};

/// Scene of static particles given in pixel coordinates.
inline holotrack::SceneSpec scene_px(int side, const std::vector<Spot>& spots, double noise = 0.0,
                                     std::uint64_t seed = 1) {
  holotrack::SceneSpec s;
  s.width = side;
  s.height = side;
  s.noise_sigma = noise;
  s.seed = seed;
  const double p = s.optics.pixel_size * 1e-3;
  for (const Spot& sp : spots) {
    holotrack::ParticleSpec ps;
    ps.x = sp.x_px * p;
    ps.y = sp.y_px * p;
    ps.z = sp.z_um;
    ps.radius = sp.radius_um;
    s.particles.push_back(ps);
  }
  return s;
}

inline holotrack::Frame hologram_px(int side, const std::vector<Spot>& spots, double noise = 0.0, std::uint64_t seed = 1) {
  return holotrack::synth_hologram(scene_px(side, spots, noise, seed));
}

}  // namespace testutil
