#include "tdbs/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <cstdint>
#include <set>

#include "tdbs/errors.hpp"
#include "tdbs/parallel.hpp"

namespace tdbs {

MeshResolution mesh_resolution(const PointCloud& cloud) {
  if (cloud.size() < 2) {
    throw EmptyInputError("mesh resolution needs at least 2 points");
  }
  double sum = 0.0;
  std::size_t count = 0;
  if (cloud.has_faces()) {
    std::set<std::pair<int, int>> edges;
    for (const auto& tri : cloud.faces) {
      for (int e = 0; e < 3; ++e) {
        int a = tri[e], b = tri[(e + 1) % 3];
        edges.insert({std::min(a, b), std::max(a, b)});
      }
    }
    for (const auto& [a, b] : edges) {
      sum += (cloud.points[a] - cloud.points[b]).norm();
    }
    count = edges.size();
  } else {
    SpatialIndex index(cloud);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      auto hits = index.knn(cloud.points[i], 2);
      for (const auto& h : hits) {
        if (h.index != static_cast<int>(i)) {
          sum += h.distance;
          ++count;
          break;
        }
      }
    }
  }
  if (count == 0) throw DegenerateGeometryError("no edges/neighbors for mesh resolution");
  MeshResolution res{sum / static_cast<double>(count)};
  if (!(res.mr > 0.0)) {
    throw DegenerateGeometryError("mesh resolution is zero (duplicate points only)");
  }
  return res;
}

NormalEstimate estimate_normals(PointCloud& cloud, int k,
                                std::optional<Vec3> viewpoint,
                                unsigned threads) {
  if (k < 3) throw ParameterError("normal estimation needs k >= 3");
  if (cloud.size() < static_cast<std::size_t>(k)) {
    throw ParameterError("normal estimation k exceeds cloud size");
  }
  Vec3 vp;
  if (viewpoint) {
    vp = *viewpoint;
  } else {
    vp = cloud.centroid() + Vec3(0, 0, 10.0 * cloud.bounding_box_diagonal());
  }
  SpatialIndex index(cloud);
  cloud.normals.assign(cloud.size(), Vec3::Zero());
  NormalEstimate est;
  est.degenerate.assign(cloud.size(), 0);
  parallel_for(
      cloud.size(),
      [&](std::size_t i) {
        auto hits = index.knn(cloud.points[i], k);
        Vec3 mean = Vec3::Zero();
        for (const auto& h : hits) mean += cloud.points[h.index];
        mean /= static_cast<double>(hits.size());
        Mat3 cov = Mat3::Zero();
        for (const auto& h : hits) {
          Vec3 d = cloud.points[h.index] - mean;
          cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        // eigenvalues ascending; normal = smallest-eigenvalue direction
        Vec3 n = eig.eigenvectors().col(0);
        const double l0 = eig.eigenvalues()[0];
        const double l1 = eig.eigenvalues()[1];
        const double scale = std::abs(eig.eigenvalues()[2]);
        if (scale <= 0.0 || (l1 - l0) / scale < 1e-9) {
          est.degenerate[i] = 1;
        }
        if (n.dot(vp - cloud.points[i]) < 0) n = -n;
        cloud.normals[i] = n.normalized();
      },
      threads);
  for (auto f : est.degenerate) est.degenerate_count += f;
  return est;
}

}  // namespace tdbs
