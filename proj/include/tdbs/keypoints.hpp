#pragma once

#include <string>
#include <vector>

#include "tdbs/geometry.hpp"
#include "tdbs/point_cloud.hpp"
#include "tdbs/spatial_index.hpp"

namespace tdbs {

struct KeypointSet {
  std::vector<int> indices;         // unique, valid for the source cloud
  std::vector<double> saliencies;   // same length, non-negative
  bool too_few_points = false;      // cloud smaller than min_neighbors
};

struct IssParams {
  double salient_radius = 0.0;  // required, > 0
  double nms_radius = 0.0;      // required, > 0
  double gamma21 = 0.975;
  double gamma32 = 0.975;
  int min_neighbors = 5;
};

/// Widely used defaults expressed in mesh-resolution units:
/// salient_radius = 6 mr, nms_radius = 4 mr.
IssParams iss_defaults(double mr);

/// Intrinsic Shape Signatures detector: eigenvalue-ratio saliency on
/// the distance-weighted neighborhood scatter matrix, followed by
/// non-maximum suppression on saliency = lambda3.
KeypointSet detect_iss(const PointCloud& cloud, const IssParams& params,
                       unsigned threads = 0);

/// Keypoint CSV: one record per line, either a single integer index or
/// an x y z triple (snapped to the nearest cloud point within 2 mr).
KeypointSet load_keypoints(const std::string& path, const PointCloud& cloud);

void save_keypoints(const std::string& path, const KeypointSet& keypoints);

}  // namespace tdbs
