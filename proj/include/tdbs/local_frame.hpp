#pragma once

#include <vector>

#include "tdbs/point_cloud.hpp"
#include "tdbs/spatial_index.hpp"

namespace tdbs {

struct Plane {
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double rms_residual = 0.0;
};

/// Distance-ordered, angle-filtered neighbors of a keypoint.
struct NeighborSet {
  int keypoint_index = -1;
  std::vector<int> neighbor_indices;   // keypoint excluded
  std::vector<double> distances;       // matching, non-decreasing
  bool fallback_used = false;          // angle rule starved, filled by kNN
  bool short_set = false;              // cloud exhausted before N
};

struct LocalReferenceFrame {
  Mat3 rotation = Mat3::Identity();  // rows = LRF x,y,z axes in world coords
  Vec3 origin = Vec3::Zero();
  double support_radius = 0.0;
  bool degenerate = false;  // near-equal eigenvalues or thin support
};

/// Neighbor positions/normals expressed in LRF coordinates, same order
/// as the source NeighborSet.
struct AlignedSurface {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
};

/// Least-squares plane through the centroid; normal is the
/// smallest-eigenvalue direction of the point covariance.
Plane best_fit_plane(const std::vector<Vec3>& points);

/// Scans the candidate_multiplier*N nearest points in ascending
/// distance, accepting a candidate when the angle (at the keypoint's
/// projection, between plane projections) to the previously accepted
/// neighbor is <= theta. Equal-distance candidates order by that angle.
NeighborSet select_neighbors_angular(const PointCloud& cloud,
                                     const SpatialIndex& index, int keypoint,
                                     int n_neighbors, double theta,
                                     int candidate_multiplier = 4);

double support_radius(const NeighborSet& neighbors);

/// Weighted-covariance LRF: M = sum (R - d_i)(p_i - p)(p_i - p)^T over
/// all cloud points with d_i <= R, normalized. Axes are eigenvectors
/// for descending eigenvalues, x and z sign-disambiguated toward the
/// majority of support vectors, y = z cross x.
LocalReferenceFrame compute_lrf(const PointCloud& cloud,
                                const SpatialIndex& index, int keypoint,
                                double radius, int min_support = 5);

AlignedSurface align(const PointCloud& cloud, const NeighborSet& neighbors,
                     const LocalReferenceFrame& lrf);

}  // namespace tdbs
