#include "holotrack/detect.hpp"
#include "holotrack/errors.hpp"
#include "holotrack/holo.hpp"
#include "holotrack/synth.hpp"
#include "holotrack/track.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace holotrack;

namespace {

constexpr double kPx = 0.132;

ParticleSpec particle_px(double x, double y, double z, double radius = 0.3) {
  ParticleSpec p;
  p.x = x * kPx;
  p.y = y * kPx;
  p.z = z;
  p.radius = radius;
  return p;
}

}  // namespace

TEST(Synth, NoParticlesIsUniform) {
  SceneSpec s;
  s.width = s.height = 64;
  const Frame f = synth_hologram(s);
  EXPECT_NEAR((f.intensities - s.exposure).abs().maxCoeff(), 0.0, 1e-12);
  s.noise_sigma = 0.01;
  const Frame g = synth_hologram(s);
  EXPECT_NEAR(g.intensities.mean(), s.exposure, 3e-3);
  EXPECT_GT((g.intensities - s.exposure).abs().maxCoeff(), 0.0);
}

TEST(Synth, DetectorFindsSingleParticle) {
  const Frame f = testutil::hologram_px(256, {{131.0, 117.0, 50.0, 1.0}});
  const auto d = detect_particles(f, DetectParams{});
  ASSERT_FALSE(d.empty());
  EXPECT_LE(std::hypot(d[0].x - 131.0, d[0].y - 117.0), 1.0);
}

TEST(Synth, AxialScanRoundTrip) {
  for (double z : {15.0, 40.0, 65.0, 95.0}) {
    const Frame f = testutil::hologram_px(512, {{256.0, 256.0, z, 0.3}});
    const auto t = extract_template(f, {256.0, 256.0}, 200, true);
    ASSERT_TRUE(t.has_value());
    const RadialProfile p = radial_profile(*t, {256.0, 256.0}, SamplingMode::Circular, 0.5, 2 * std::numbers::pi / 64);
    const auto r = axial_scan(extend_profile(p, 2.0), ZScan{10, 0.5, 100}, OpticalConfig{}, 1.0, false);
    EXPECT_NEAR(r.z_star, z, 0.5) << "z = " << z;
  }
}

TEST(Synth, RadialSymmetryAboutCentredParticle) {
  SceneSpec s;
  s.width = s.height = 128;
  s.particles = {particle_px(64, 64, 30, 0.8)};
  const Frame f = synth_hologram(s);
  const Image& img = f.intensities;
  double worst = 0.0;
  for (int y = 1; y < 128; ++y)
    for (int x = 1; x < 128; ++x) {
      worst = std::max(worst, std::abs(img(y, x) - img(y, 128 - x)));
      worst = std::max(worst, std::abs(img(y, x) - img(128 - y, x)));
      worst = std::max(worst, std::abs(img(y, x) - img(x, y)));
    }
  EXPECT_LE(worst, 1e-9);
  EXPECT_GT((img - img.mean()).abs().maxCoeff(), 1e-3);
}

TEST(Synth, FieldsSuperpose) {
  SceneSpec a, b, both;
  a.width = a.height = b.width = b.height = both.width = both.height = 96;
  a.particles = {particle_px(25, 30, 20, 0.6)};
  b.particles = {particle_px(70, 66, 45, 0.9)};
  b.particles[0].amplitude = 0.4;
  b.particles[0].phase = 1.1;
  both.particles = {a.particles[0], b.particles[0]};
  const ComplexImage fa = scatter_field(a, 0), fb = scatter_field(b, 0), fab = scatter_field(both, 0);
  EXPECT_LE(((fab - 1.0) - (fa - 1.0) - (fb - 1.0)).abs().maxCoeff(), 1e-9);
}

TEST(Synth, DeterministicFrames) {
  SceneSpec s;
  s.width = s.height = 64;
  s.noise_sigma = 0.05;
  s.seed = 99;
  s.particles = {particle_px(30, 31, 25, 0.8)};
  const Frame a = render_frame(s, 3), b = render_frame(s, 3), c = render_frame(s, 4);
  EXPECT_TRUE((a.intensities == b.intensities).all());
  EXPECT_FALSE((a.intensities == c.intensities).all());
}

TEST(Synth, StaticParticleFramesDifferOnlyByNoise) {
  SceneSpec s;
  s.width = s.height = 64;
  s.frames = 100;
  s.particles = {particle_px(32, 32, 25, 0.8)};
  const SynthVideo v = synth_motion_video(s);
  ASSERT_EQ(v.frames.size(), 100u);
  for (const Frame& f : v.frames) EXPECT_TRUE((f.intensities == v.frames[0].intensities).all());
  s.noise_sigma = 0.01;
  s.frames = 2;
  const SynthVideo n = synth_motion_video(s);
  const double rms = std::sqrt((n.frames[0].intensities - v.frames[0].intensities).square().mean());
  EXPECT_NEAR(rms, 0.01, 0.002);
}

TEST(Synth, SinusoidGroundTruth) {
  SceneSpec s;
  ParticleSpec p = particle_px(100, 80, 40);
  p.motion.kind = MotionKind::Sinusoid;
  p.motion.axis = 0;
  p.motion.amplitude_um = 1.9 * kPx;
  p.motion.period_frames = 400;
  s.particles = {p};
  for (int t : {0, 1, 57, 100, 399, 1234}) {
    const auto g = ground_truth(s, t);
    EXPECT_NEAR(g[0].x_px, 100.0 + 1.9 * std::sin(2 * std::numbers::pi * t / 400.0), 1e-12);
    EXPECT_NEAR(g[0].y_px, 80.0, 1e-12);
    EXPECT_EQ(g[0].z_um, 40.0);
  }
}

TEST(Synth, PoiseuilleGroundTruthSpeeds) {
  SceneSpec s;
  for (int i = 0; i < 30; ++i) {
    ParticleSpec p = particle_px(10, 5 + 8 * i, 3.0 + 3.1 * i);
    p.motion.kind = MotionKind::Poiseuille;
    p.motion.axis = 0;
    p.motion.v_max = 1050;
    p.motion.channel_height = 100;
    p.motion.frame_rate = 200;
    s.particles.push_back(p);
  }
  const auto g0 = ground_truth(s, 0), g1 = ground_truth(s, 50);
  for (int i = 0; i < 30; ++i) {
    const double z = s.particles[i].z;
    const double speed = (g1[i].x_px - g0[i].x_px) * kPx / (50.0 / 200.0);
    EXPECT_NEAR(speed, 1050.0 * 4.0 * (z / 100.0) * (1.0 - z / 100.0), 1e-9);
  }
}

TEST(Synth, ParticleOutsideFrameRejected) {
  SceneSpec s;
  s.width = s.height = 64;
  s.particles = {particle_px(70, 10, 20)};
  EXPECT_THROW(synth_hologram(s), DataError);
}

TEST(Synth, VideoTruthOnlyForVisibleParticles) {
  SceneSpec s;
  s.width = s.height = 32;
  s.frames = 3;
  ParticleSpec p = particle_px(30, 16, 20);
  p.motion.kind = MotionKind::Linear;
  p.motion.velocity = Eigen::Vector3d(kPx, 0, 0);
  s.particles = {p};
  const SynthVideo v = synth_motion_video(s);
  ASSERT_EQ(v.truth.size(), 2u);
  EXPECT_EQ(v.truth[1].frame, 1);
}

TEST(SceneFile, ParsesAllMotionKinds) {
  std::istringstream in(R"(# comment
width = 128
height = 96
frames = 4
noise_sigma = 0.01
seed = 7
wavelength = 500
particle = 5 6 40 0.3
particle = 5 6 40 0.3 0.5 1.0 linear 0.1 0 0
particle = 5 6 40 0.3 sinusoid 1 0.25 400 0.5
particle = 5 6 40 0.3 poiseuille 0 1050 100 200
)");
  const SceneSpec s = parse_scene(in);
  EXPECT_EQ(s.width, 128);
  EXPECT_EQ(s.height, 96);
  EXPECT_EQ(s.frames, 4);
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.optics.wavelength_vacuum, 500.0);
  ASSERT_EQ(s.particles.size(), 4u);
  EXPECT_EQ(s.particles[1].amplitude, 0.5);
  EXPECT_EQ(s.particles[1].motion.kind, MotionKind::Linear);
  EXPECT_EQ(s.particles[2].motion.axis, 1);
  EXPECT_EQ(s.particles[2].motion.phase, 0.5);
  EXPECT_EQ(s.particles[3].motion.v_max, 1050.0);
}

TEST(SceneFile, Errors) {
  std::istringstream unknown("colour = red\n");
  try {
    parse_scene(unknown);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
  std::istringstream bad_motion("particle = 1 2 3 0.3 spiral 1\n");
  EXPECT_THROW(parse_scene(bad_motion), ConfigError);
  std::istringstream short_particle("particle = 1 2 3\n");
  EXPECT_THROW(parse_scene(short_particle), ConfigError);
}

TEST(SceneFile, WriteVideo) {
  SceneSpec s;
  s.width = s.height = 32;
  s.frames = 2;
  s.particles = {particle_px(16, 16, 20)};
  const auto dir = testutil::scratch_dir("synth_video");
  write_video(synth_motion_video(s), dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "frame_00000.pgm"));
  EXPECT_TRUE(std::filesystem::exists(dir / "frame_00001.pgm"));
  const std::string gt = testutil::slurp(dir / "ground_truth.csv");
  EXPECT_EQ(gt.substr(0, gt.find('\n')), "frame,particle_id,x_px,y_px,z_um");
  EXPECT_NE(gt.find("1,0,16,16,20"), std::string::npos);
}
