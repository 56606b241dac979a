#pragma once

#include <vector>

#include "tdbs/point_cloud.hpp"

namespace tdbs {

/// kd-tree over the points of a PointCloud. Query results are identical
/// to a linear scan; distance ties break by ascending point index.
/// Immutable after construction, safe for concurrent queries.
class SpatialIndex {
 public:
  struct Hit {
    int index;
    double distance;
  };

  explicit SpatialIndex(const PointCloud& cloud);

  /// k nearest points by Euclidean distance, ascending. Returns all
  /// points when the cloud has fewer than k.
  std::vector<Hit> knn(const Vec3& query, int k) const;

  /// All points with distance <= r, sorted by (distance, index).
  std::vector<Hit> radius(const Vec3& query, double r) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;   // leaf: range into order_
    int end = 0;
    int axis = 0;
    double split = 0.0;
  };

  int build(int begin, int end);
  void knn_recurse(int node, const Vec3& query, int k,
                   std::vector<Hit>& heap) const;
  void radius_recurse(int node, const Vec3& query, double r2,
                      std::vector<Hit>& out) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;   // permutation of point indices, leaf ranges
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace tdbs
