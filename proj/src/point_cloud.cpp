#include "tdbs/point_cloud.hpp"

#include <cmath>
#include <limits>

#include "tdbs/errors.hpp"

namespace tdbs {

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw MalformedInputError("point " + std::to_string(i) +
                                " has non-finite coordinates");
    }
  }
  if (!normals.empty()) {
    if (normals.size() != points.size()) {
      throw MalformedInputError("normal count " +
                                std::to_string(normals.size()) +
                                " does not match point count " +
                                std::to_string(points.size()));
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
      if (std::abs(normals[i].norm() - 1.0) > 1e-9) {
        throw MalformedInputError("normal " + std::to_string(i) +
                                  " is not unit length");
      }
    }
  }
  const int n = static_cast<int>(points.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int v : faces[f]) {
      if (v < 0 || v >= n) {
        throw MalformedInputError("face " + std::to_string(f) +
                                  " references out-of-range vertex " +
                                  std::to_string(v));
      }
    }
  }
}

Vec3 PointCloud::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : points) c += p;
  if (!points.empty()) c /= static_cast<double>(points.size());
  return c;
}

std::pair<Vec3, Vec3> PointCloud::bounding_box() const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

double PointCloud::bounding_box_diagonal() const {
  if (points.empty()) return 0.0;
  auto [lo, hi] = bounding_box();
  return (hi - lo).norm();
}

}  // namespace tdbs
