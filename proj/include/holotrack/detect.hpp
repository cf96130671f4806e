#pragma once

#include "holotrack/frame_io.hpp"
#include "holotrack/image.hpp"

#include <cstdint>
#include <vector>

namespace holotrack {

/// Binary edge pixels plus the smoothed image gradient used for voting.
struct EdgeMap {
  Mask binary;
  Image grad_x;
  Image grad_y;

  Eigen::Index width() const { return binary.cols(); }
  Eigen::Index height() const { return binary.rows(); }
  std::size_t count() const;
};

struct PixelPoint {
  int x = 0;
  int y = 0;
  bool operator==(const PixelPoint&) const = default;
};

/// 8-connected chain of edge pixels.
struct Segment {
  std::vector<PixelPoint> points;
  std::size_t length() const { return points.size(); }
};

struct VoteMap {
  Image votes;
};

struct Detection {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
  int frame_index = 0;
};

struct DetectParams {
  int num_scales = 3;
  double its_threshold = 0.1;
  int min_segment_length = 10;
  double min_votes = 30.0;
  double iterations_multiple = 5.0;
  int mapping_kernel_radius = 2;
  double canny_multiple = 1.0;
  double canny_sigma = 1.0;  // pre-smoothing of the Canny stage, pixels
  std::uint64_t seed = 42;

  void validate() const;
  bool operator==(const DetectParams&) const = default;
};

struct OtsuResult {
  double threshold = 0.0;  // upper boundary of the last bin in the lower class
  int bin = 0;
  bool degenerate = false;  // no between-class variance anywhere
};

/// 256-bin Otsu threshold of an image in [0, 1]. Ties resolve to the lowest bin.
OtsuResult otsu_threshold(const Image& img);

/// Canny edges with thresholds relative to the maximum gradient magnitude.
/// Throws ConfigError when high < low.
EdgeMap canny_edges(const Image& img, double high, double low, double sigma = 1.0);

/// Canny with high = canny_multiple * otsu(img) and low = high / 3.
EdgeMap canny_edges_auto(const Image& img, double canny_multiple, double sigma = 1.0);

/// Traces 8-connected edge components; components shorter than min_len are dropped.
std::vector<Segment> link_segments(const EdgeMap& edges, int min_len);

/// Randomised isosceles-triangle voting. Each draw takes two points of one
/// segment, intersects their gradient rays (either orientation) and, when the
/// apex is equidistant within its_threshold, deposits a unit-mass Gaussian.
VoteMap its_transform(const std::vector<Segment>& segments, const EdgeMap& edges, const DetectParams& params,
                      std::uint64_t seed);

/// Unit-sum (2r+1)^2 Gaussian with sigma = r / 2.
Image vote_kernel(int radius);

struct DetectionLevel {
  Image image;
  EdgeMap edges;
  std::vector<Segment> segments;
  VoteMap votes;
};

struct DetectionReport {
  std::vector<Detection> detections;
  Image fused;       // raw summed votes at full resolution
  Image normalized;  // fused / max(fused)
  std::vector<DetectionLevel> levels;
};

/// Multi-scale detection; all coordinates are in the pixels of `frame`.
std::vector<Detection> detect_particles(const Frame& frame, const DetectParams& params);

/// Same as detect_particles but keeps the intermediate maps for previews.
DetectionReport detect_particles_report(const Frame& frame, const DetectParams& params);

/// Local maxima of a vote map above min_votes, merged within merge_radius,
/// refined by a 3x3 centroid and sorted by descending score.
std::vector<Detection> extract_peaks(const Image& fused, double min_votes, double merge_radius, int frame_index);

}  // namespace holotrack
