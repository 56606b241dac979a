#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace tdbs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A point cloud with optional per-point unit normals and optional
/// triangle faces. Immutable by convention once handed to downstream
/// stages; safe to read from many threads.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;                // empty, or one per point
  std::vector<std::array<int, 3>> faces;    // empty, or triangle index triples
  std::string id;

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }
  bool has_faces() const { return !faces.empty(); }

  /// Throws on invariant violation: non-finite coordinates, normal
  /// count/length mismatch, out-of-range face indices.
  void validate() const;

  Vec3 centroid() const;
  std::pair<Vec3, Vec3> bounding_box() const;  // (min, max)
  double bounding_box_diagonal() const;
};

}  // namespace tdbs
