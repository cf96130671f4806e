#include "holotrack/config.hpp"
#include "holotrack/errors.hpp"
#include "holotrack/text.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <clocale>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace holotrack;

namespace {

RunConfig random_config(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(g); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(g); };

  RunConfig c;
  if (pick(0, 1)) c.preprocess.roi = Roi{pick(0, 100), pick(0, 100), pick(1, 900), pick(1, 900)};
  c.preprocess.boundary_margin = pick(0, 120);
  c.preprocess.resize_factor = uni(0.1, 3.0);
  c.preprocess.gaussian_kernel = pick(0, 1) ? 0 : 2 * pick(0, 6) + 1;
  c.preprocess.normalize = pick(0, 1);
  c.preprocess.background = static_cast<BackgroundMode>(pick(0, 2));
  c.preprocess.background_window = pick(1, 50);

  c.detect.num_scales = pick(1, 4);
  c.detect.its_threshold = uni(0.01, 0.3);
  c.detect.min_segment_length = pick(3, 100);
  c.detect.min_votes = uni(5, 50);
  c.detect.iterations_multiple = uni(1, 10);
  c.detect.mapping_kernel_radius = pick(1, 10);
  c.detect.canny_multiple = uni(0, 10);
  c.detect.canny_sigma = uni(0, 4);
  c.detect.seed = static_cast<std::uint64_t>(pick(0, 1 << 30));

  c.track.cost_non_assignment = uni(1, 300);
  c.track.max_travel = uni(1, 300);
  c.track.max_tracks = pick(1, 500);
  c.track.template_radius = pick(10, 500);
  c.track.boundary_required = pick(0, 1);
  c.track.max_misses = pick(1, 20);
  c.track.kalman.initial_position_variance = uni(1e-3, 1e3);
  c.track.kalman.initial_velocity_variance = uni(1e-3, 1e3);
  c.track.kalman.process_position_noise = uni(1e-3, 10);
  c.track.kalman.process_velocity_noise = uni(1e-3, 10);
  c.track.kalman.measurement_noise = uni(1e-3, 10);

  c.profile.mode = pick(0, 1) ? SamplingMode::Circular : SamplingMode::Sector;
  c.profile.delta_r = uni(0.01, 1.0);
  c.profile.delta_theta = uni(0.001, std::numbers::pi / 4);
  c.profile.xcorr = pick(0, 1);

  c.reconstruction.enabled = pick(0, 1);
  c.reconstruction.method = static_cast<ReconstructionMethod>(pick(0, 2));
  c.reconstruction.margin_factor = uni(1, 4);
  c.reconstruction.mask_radius = uni(0, 5);
  c.optics.wavelength_vacuum = uni(0.3, 1.2);
  c.optics.refractive_index = uni(1.0, 1.6);
  c.optics.pixel_size = uni(0.05, 2.0);
  c.scan.z_start = uni(-50, 50);
  c.scan.z_step = uni(0.01, 2);
  c.scan.z_end = c.scan.z_start + uni(1, 300);

  c.flow.min_travel = uni(0, 50);
  c.flow.min_track_size = pick(2, 100);
  c.flow.max_axial_std = uni(0.1, 20);
  c.flow.frame_rate = uni(1, 1000);
  c.flow.z_min = uni(-10, 50);
  c.flow.z_max = c.flow.z_min + uni(1, 200);
  c.flow.fit_min = uni(-10, 50);
  c.flow.fit_max = c.flow.fit_min + uni(1, 200);
  c.flow.bin_width = uni(0.1, 10);
  c.fit_order = pick(0, 6);
  c.output_dir = "run_" + std::to_string(seed) + "/out dir";
  return c;
}

std::string with_line(const std::string& key, const std::string& value) {
  return serialize_config(RunConfig{}) + key + " = " + value + "\n";
}

std::string replace_value(const std::string& key, const std::string& value) {
  std::istringstream in(serialize_config(RunConfig{}));
  std::string line, out;
  while (std::getline(in, line)) out += (line.rfind(key + " = ", 0) == 0 ? key + " = " + value : line) + "\n";
  return out;
}

std::string error_of(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, Defaults) {
  const RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.preprocess.background_window, 10);
  EXPECT_EQ(c.preprocess.resize_factor, 1.0);
  EXPECT_EQ(c.track.template_radius, 200);
  EXPECT_EQ(c.track.cost_non_assignment, 80.0);
  EXPECT_EQ(c.track.max_misses, 5);
  EXPECT_EQ(c.detect.min_votes, 30.0);
  EXPECT_EQ(c.detect.iterations_multiple, 5.0);
  EXPECT_EQ(c.detect.num_scales, 3);
  EXPECT_EQ(c.detect.min_segment_length, 10);
  EXPECT_EQ(c.detect.seed, 42u);
  EXPECT_EQ(c.reconstruction.margin_factor, 2.0);
  EXPECT_EQ(c.profile.delta_r, 0.5);
  EXPECT_DOUBLE_EQ(c.profile.delta_theta, 2.0 * std::numbers::pi / 64.0);
  EXPECT_EQ(c.track.kalman.initial_position_variance, 100.0);
  EXPECT_EQ(c.track.kalman.initial_velocity_variance, 25.0);
  EXPECT_EQ(c.track.kalman.process_position_noise, 1.0);
  EXPECT_EQ(c.track.kalman.process_velocity_noise, 0.25);
  EXPECT_EQ(c.track.kalman.measurement_noise, 1.0);
  EXPECT_EQ(c.fit_order, 2);
  EXPECT_EQ(c.flow.bin_width, 2.0);
}

TEST(Config, EmptyTextGivesDefaults) {
  EXPECT_EQ(parse_config_string(""), RunConfig{});
  EXPECT_EQ(parse_config_string("# only a comment\n\n   \n"), RunConfig{});
}

TEST(Config, RoundTripDefaults) {
  const RunConfig c;
  EXPECT_EQ(parse_config_string(serialize_config(c)), c);
}

TEST(Config, RoundTripRandomValidConfigs) {
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    const RunConfig c = random_config(seed);
    ASSERT_NO_THROW(c.validate()) << seed;
    const std::string text = serialize_config(c);
    const RunConfig back = parse_config_string(text);
    ASSERT_EQ(back, c) << "seed " << seed << "\n" << text;
    ASSERT_EQ(serialize_config(back), text);
  }
}

TEST(Config, RoundTripAwkwardDoubles) {
  RunConfig c;
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, 0.30000000000000004, 5e-324}) {
    c.track.kalman.measurement_noise = v;
    EXPECT_EQ(parse_config_string(serialize_config(c)).track.kalman.measurement_noise, v) << v;
  }
}

TEST(Config, EveryKeyListedOnce) {
  std::istringstream in(serialize_config(RunConfig{}));
  std::set<std::string> keys;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    ASSERT_NE(eq, std::string::npos) << line;
    keys.insert(line.substr(0, eq));
    ++n;
  }
  EXPECT_EQ(static_cast<int>(keys.size()), n);
  for (const char* k : {"its_transform_threshold", "cost_of_nonassignment", "paraxial_mask_radius", "template_size",
                        "minimum_votes", "reconstruction_method", "seed", "output_dir", "fit_order"}) {
    EXPECT_TRUE(keys.count(k)) << k;
  }
}

TEST(Config, UnknownKeyNamesTheKey) {
  const std::string msg = error_of(with_line("cost_of_non_assignment", "80"));
  EXPECT_NE(msg.find("cost_of_non_assignment"), std::string::npos) << msg;
  EXPECT_NE(msg.find("unknown"), std::string::npos) << msg;
  EXPECT_THROW(parse_config_string("Seed = 4\n"), ConfigError);
}

TEST(Config, DuplicateKeyRejected) {
  const std::string msg = error_of(with_line("minimum_votes", "20"));
  EXPECT_NE(msg.find("minimum_votes"), std::string::npos) << msg;
}

TEST(Config, MalformedLinesRejected) {
  EXPECT_THROW(parse_config_string("minimum_votes 20\n"), ConfigError);
  EXPECT_THROW(parse_config_string("minimum_votes = twenty\n"), ConfigError);
  EXPECT_THROW(parse_config_string("number_of_scales = 2.5\n"), ConfigError);
  EXPECT_THROW(parse_config_string("xcorr = maybe\n"), ConfigError);
}

TEST(Config, OutOfRangeValuesRejected) {
  const std::vector<std::pair<std::string, std::string>> bad = {
      {"template_size", "5"},           {"template_size", "501"},       {"fit_order", "7"},
      {"fit_order", "-1"},              {"number_of_scales", "0"},      {"number_of_scales", "5"},
      {"its_transform_threshold", "0.5"}, {"minimum_votes", "4"},      {"minimum_segment_length", "2"},
      {"iterations_multiple", "11"},    {"mapping_kernel_radius", "0"}, {"canny_multiple", "-1"},
      {"gaussian_kernel_size", "4"},    {"resize_factor", "0"},         {"background_frames", "0"},
      {"boundary_margin", "-3"},        {"delta_r", "1.5"},             {"delta_theta", "1"},
      {"step_size", "0"},               {"last_step", "-100"},          {"wavelength", "-0.6"},
      {"template_margins", "0.5"},      {"paraxial_mask_radius", "-1"}, {"cost_of_nonassignment", "0"},
      {"number_of_tracks", "0"},        {"max_misses", "0"},            {"kalman_measurement_noise", "0"},
      {"minimum_track_size", "1"},      {"z_max", "-5"},                {"fitting_bin_width", "0"},
      {"seed", "-1"},                   {"roi", "0 0 -5 10"},           {"roi", "1 2 3"},
      {"background_mode", "rolling"},   {"sampling_mode", "square"},    {"reconstruction_method", "3D"},
      {"output_dir", ""},
  };
  for (const auto& [k, v] : bad) {
    EXPECT_THROW(parse_config_string(replace_value(k, v)), ConfigError) << k << " = " << v;
  }
}

TEST(Config, RangeEndpointsAccepted) {
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"template_size", "10"}, {"template_size", "500"}, {"fit_order", "0"}, {"fit_order", "6"},
           {"number_of_scales", "1"}, {"number_of_scales", "4"}, {"its_transform_threshold", "0.01"},
           {"its_transform_threshold", "0.3"}, {"minimum_votes", "5"}, {"minimum_votes", "50"},
           {"gaussian_kernel_size", "0"}, {"delta_r", "1"}, {"canny_multiple", "0"}}) {
    EXPECT_NO_THROW(parse_config_string(replace_value(k, v))) << k << " = " << v;
  }
}

TEST(Config, RoiAndEnumParsing) {
  const RunConfig c = parse_config_string(
      "roi = 10 20 300 400\nbackground_mode = moving_average\nsampling_mode = sector\nreconstruction_method = 1D_decov\n");
  ASSERT_TRUE(c.preprocess.roi.has_value());
  EXPECT_EQ(c.preprocess.roi->x0, 10);
  EXPECT_EQ(c.preprocess.roi->y0, 20);
  EXPECT_EQ(c.preprocess.roi->width, 300);
  EXPECT_EQ(c.preprocess.roi->height, 400);
  EXPECT_EQ(c.preprocess.background, BackgroundMode::MovingAverage);
  EXPECT_EQ(c.profile.mode, SamplingMode::Sector);
  EXPECT_EQ(c.reconstruction.method, ReconstructionMethod::OneDDeconvolved);
  EXPECT_FALSE(parse_config_string("roi = none\n").preprocess.roi.has_value());
}

TEST(Config, MethodStrings) {
  for (auto m : {ReconstructionMethod::OneD, ReconstructionMethod::OneDDeconvolved, ReconstructionMethod::TwoD}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(to_string(ReconstructionMethod::TwoD), "2D");
  EXPECT_THROW(parse_method("1d"), ConfigError);
}

TEST(Config, CommentsAndWhitespace) {
  const RunConfig c = parse_config_string("  minimum_votes=12   # lower\n\t# skipped = 3\nxcorr = false\n");
  EXPECT_EQ(c.detect.min_votes, 12.0);
  EXPECT_FALSE(c.profile.xcorr);
}

TEST(Config, LoadFromFile) {
  const auto dir = testutil::scratch_dir("config_load");
  const auto path = dir / "run.cfg";
  const RunConfig c = random_config(77);
  write_text(path, serialize_config(c));
  EXPECT_EQ(load_config(path), c);
  EXPECT_ANY_THROW(load_config(dir / "missing.cfg"));
}

TEST(Config, LocaleIndependent) {
  const char* prev = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = prev ? prev : "C";
  const bool switched = std::setlocale(LC_NUMERIC, "de_DE.UTF-8") != nullptr;
  const RunConfig c = random_config(5);
  const std::string text = serialize_config(c);
  EXPECT_EQ(text.find(','), std::string::npos);
  EXPECT_EQ(parse_config_string(text), c);
  EXPECT_EQ(parse_config_string("wavelength = 0.532\n").optics.wavelength_vacuum, 0.532);
  std::setlocale(LC_NUMERIC, saved.c_str());
  if (!switched) GTEST_SKIP() << "de_DE locale not installed; checked under the default locale only";
}

TEST(Text, FormatDoubleRoundTrips) {
  std::mt19937_64 g(3);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(std::uniform_real_distribution<double>(-1, 1)(g), static_cast<int>(g() % 200) - 100);
    EXPECT_EQ(parse_double(format_double(v), "v"), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_fixed(1.23456, 2), "1.23");
}
